//! Keyed deterministic randomness standing in for pseudorandom and t-wise
//! independent functions.
//!
//! The keyed-hash mode is SipHash-2-4 keyed with `(key, KEYED_HASH_TWEAK)`
//! over the little-endian input. No security claim is made. The k-wise mode
//! evaluates a degree `t - 1` polynomial over GF(2^64) whose coefficients are
//! derived from the key; the top `out_bits` of the field element are returned.

use std::hash::Hasher;

use serde::{Deserialize, Serialize};
use siphasher::sip::SipHasher24;

/// Identifier recorded in run manifests.
pub const KEYED_HASH_ID: &str = "siphash-2-4/k1=0x5157a11d15c0de01/top-bits";

const KEYED_HASH_TWEAK: u64 = 0x5157_a11d_15c0_de01;
const COEFFICIENT_TWEAK: u64 = 0xc0ef_f1c1_e275_0002;

/// How keyed random bits are produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum RandomnessMode {
    #[default]
    KeyedHash,
    /// Polynomial family that is exactly uniform on any `t` distinct inputs.
    KWise { t: usize },
}

fn siphash(k0: u64, k1: u64, input: u64) -> u64 {
    let mut h = SipHasher24::new_with_keys(k0, k1);
    h.write(&input.to_le_bytes());
    h.finish()
}

fn top_bits(x: u64, out_bits: u32) -> u64 {
    assert!(out_bits <= 64, "at most 64 output bits");
    if out_bits == 0 {
        0
    } else {
        x >> (64 - out_bits)
    }
}

/// Multiplication in GF(2^64) modulo x^64 + x^4 + x^3 + x + 1.
pub fn gf64_mul(a: u64, b: u64) -> u64 {
    let mut product: u128 = 0;
    for bit in 0..64 {
        if (b >> bit) & 1 == 1 {
            product ^= (a as u128) << bit;
        }
    }
    // Fold the high half twice; the reduction polynomial has degree 4 tail.
    for _ in 0..2 {
        let high = (product >> 64) as u64;
        product &= u64::MAX as u128;
        let h = high as u128;
        product ^= h ^ (h << 1) ^ (h << 3) ^ (h << 4);
    }
    product as u64
}

/// A keyed function with its derived state precomputed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyedFunction {
    key: u64,
    mode: RandomnessMode,
    coefficients: Vec<u64>,
}

impl KeyedFunction {
    pub fn new(mode: RandomnessMode, key: u64) -> Self {
        let coefficients = match mode {
            RandomnessMode::KeyedHash => Vec::new(),
            RandomnessMode::KWise { t } => (0..t.max(1) as u64)
                .map(|i| siphash(key, COEFFICIENT_TWEAK, i))
                .collect(),
        };
        KeyedFunction {
            key,
            mode,
            coefficients,
        }
    }

    /// Constant coefficient of the k-wise polynomial.
    pub fn constant_coefficient(&self) -> Option<u64> {
        match self.mode {
            RandomnessMode::KeyedHash => None,
            RandomnessMode::KWise { .. } => self.coefficients.first().copied(),
        }
    }

    pub fn eval(&self, input: u64, out_bits: u32) -> u64 {
        let full = match self.mode {
            RandomnessMode::KeyedHash => siphash(self.key, KEYED_HASH_TWEAK, input),
            RandomnessMode::KWise { .. } => {
                // Horner's rule from the highest-degree coefficient.
                self.coefficients
                    .iter()
                    .rev()
                    .fold(0u64, |acc, &c| gf64_mul(acc, input) ^ c)
            }
        };
        top_bits(full, out_bits)
    }
}

/// Evaluates the keyed function once; prefer [`KeyedFunction`] in loops.
pub fn keyed_random(mode: RandomnessMode, key: u64, input: u64, out_bits: u32) -> u64 {
    KeyedFunction::new(mode, key).eval(input, out_bits)
}
