use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::geometry::LatticeSpec;
use super::keyed::{KeyedFunction, RandomnessMode};
use crate::error::{Error, Result};

/// Disorder ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisorderKind {
    BinaryAlloy,
    Structural,
    Magnetic,
    None,
}

fn default_bits() -> u32 {
    8
}

fn default_hopping() -> [[f64; 2]; 2] {
    [[-1.0, -1.0], [-1.0, -1.0]]
}

fn default_decay() -> [[f64; 2]; 2] {
    [[0.0, 0.0], [0.0, 0.0]]
}

/// Parameters of the disorder ensemble together with the randomness key.
///
/// Hopping between a site of type `b` and a site of type `a` at distance `d`
/// is `hopping[a][b] * exp(-decay[a][b] * d)` times a Peierls phase. The self
/// slot (distance zero) contributes the on-site term `hopping[a][a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    /// Probability of atom type 1 (binary alloy).
    #[serde(default)]
    pub p: f64,
    #[serde(default = "default_hopping")]
    pub hopping: [[f64; 2]; 2],
    #[serde(default = "default_decay")]
    pub decay: [[f64; 2]; 2],
    /// Bits of keyed output driving each displacement component.
    #[serde(default = "default_bits")]
    pub displacement_bits: u32,
    /// Displacements are uniform on `[-half_width, half_width)` per axis.
    #[serde(default)]
    pub half_width: f64,
    /// Bits of the distance and phase registers.
    #[serde(default = "default_bits")]
    pub bits: u32,
    /// Upper bound on inter-site distance used by the distance quantizer.
    /// Defaults to the smallest power of two strictly above the largest
    /// possible bond length.
    #[serde(default)]
    pub max_distance: Option<f64>,
    /// On-site energies per atom type replacing the distance-zero hopping
    /// `hopping[a][a]` on the diagonal.
    #[serde(default)]
    pub onsite: Option<[f64; 2]>,
    #[serde(default)]
    pub key: u64,
    #[serde(default)]
    pub randomness: RandomnessMode,
}

impl DisorderSpec {
    pub fn clean(t: f64, gamma: f64) -> Self {
        DisorderSpec {
            kind: DisorderKind::None,
            p: 0.0,
            hopping: [[t, t], [t, t]],
            decay: [[gamma, gamma], [gamma, gamma]],
            displacement_bits: default_bits(),
            half_width: 0.0,
            bits: default_bits(),
            max_distance: None,
            onsite: None,
            key: 0,
            randomness: RandomnessMode::KeyedHash,
        }
    }

    pub fn binary_alloy(p: f64, hopping: [[f64; 2]; 2], decay: [[f64; 2]; 2], key: u64) -> Self {
        DisorderSpec {
            kind: DisorderKind::BinaryAlloy,
            p,
            hopping,
            decay,
            key,
            ..Self::clean(-1.0, 0.0)
        }
    }

    pub fn structural(
        t: f64,
        gamma: f64,
        half_width: f64,
        displacement_bits: u32,
        key: u64,
    ) -> Self {
        DisorderSpec {
            kind: DisorderKind::Structural,
            half_width,
            displacement_bits,
            key,
            ..Self::clean(t, gamma)
        }
    }

    pub fn magnetic(t: f64, gamma: f64, bits: u32, key: u64) -> Self {
        DisorderSpec {
            kind: DisorderKind::Magnetic,
            bits,
            key,
            ..Self::clean(t, gamma)
        }
    }

    pub fn with_onsite(mut self, onsite: [f64; 2]) -> Self {
        self.onsite = Some(onsite);
        self
    }

    pub fn with_key(mut self, key: u64) -> Self {
        self.key = key;
        self
    }

    pub fn validate(&self, lattice: &LatticeSpec) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!(
                "alloy probability {} outside [0, 1]",
                self.p
            )));
        }
        for a in 0..2 {
            for b in 0..2 {
                if self.hopping[a][b] != self.hopping[b][a] || self.decay[a][b] != self.decay[b][a]
                {
                    return Err(Error::Config(
                        "hopping and decay tables must be symmetric".into(),
                    ));
                }
                if !self.hopping[a][b].is_finite()
                    || !self.onsite.unwrap_or_default()[a].is_finite()
                {
                    return Err(Error::Config("non-finite hopping amplitude".into()));
                }
                if !(self.decay[a][b] >= 0.0 && self.decay[a][b].is_finite()) {
                    return Err(Error::Config("decay rates must be non-negative".into()));
                }
            }
        }
        if !(1..=30).contains(&self.bits) || !(1..=30).contains(&self.displacement_bits) {
            return Err(Error::Config(
                "register widths must lie in 1..=30 bits".into(),
            ));
        }
        if !(self.half_width >= 0.0 && self.half_width < 0.5 * lattice.lattice_constant) {
            return Err(Error::Config(format!(
                "displacement half-width {} must lie in [0, a/2)",
                self.half_width
            )));
        }
        if let RandomnessMode::KWise { t } = self.randomness {
            if t == 0 {
                return Err(Error::Config(
                    "k-wise independence parameter must be at least 1".into(),
                ));
            }
        }
        let longest = self.longest_bond(lattice);
        let d_max = self.distance_bound(lattice);
        if !(d_max > longest) {
            return Err(Error::Config(format!(
                "max_distance {d_max} must exceed the longest bond {longest}"
            )));
        }
        Ok(())
    }

    fn effective_half_width(&self) -> f64 {
        if self.kind == DisorderKind::Structural {
            self.half_width
        } else {
            0.0
        }
    }

    fn longest_bond(&self, lattice: &LatticeSpec) -> f64 {
        let dim = lattice.dimension() as f64;
        lattice.cutoff + 2.0 * self.effective_half_width() * dim.sqrt()
    }

    /// `d_max` of the distance quantizer.
    pub fn distance_bound(&self, lattice: &LatticeSpec) -> f64 {
        if let Some(d) = self.max_distance {
            return d;
        }
        let longest = self.longest_bond(lattice);
        let mut d = 1.0;
        while d <= longest {
            d *= 2.0;
        }
        d
    }

    /// Largest `|t_ab|` (and on-site energy), floored at one: the per-entry
    /// sub-normalization.
    pub fn max_hopping(&self) -> f64 {
        let t = self
            .hopping
            .iter()
            .flatten()
            .fold(1.0f64, |m, t| m.max(t.abs()));
        self.onsite.iter().flatten().fold(t, |m, e| m.max(e.abs()))
    }

    /// Signed prefactor and decay rate for a hop from type `b` to type `a`.
    /// The self slot has distance zero, so its decay rate is irrelevant.
    pub fn amplitude(&self, a: usize, b: usize, self_slot: bool) -> (f64, f64) {
        match (self_slot, self.onsite) {
            (true, Some(e)) => (if a == b { e[a] } else { 0.0 }, 0.0),
            _ => (self.hopping[a][b], self.decay[a][b]),
        }
    }

    pub fn keyed(&self) -> KeyedFunction {
        KeyedFunction::new(self.randomness, self.key)
    }
}

/// Inverse-transform comparator: 1 iff `o < p N`.
pub fn comparator(p: f64, site_bits: u32, o: u64) -> u8 {
    let threshold = p * (1u64 << site_bits) as f64;
    u8::from((o as f64) < threshold)
}

/// Atom type of `site`; zero for every site unless the kind is binary alloy.
pub fn sample_atom_type(spec: &DisorderSpec, lattice: &LatticeSpec, site: usize) -> u8 {
    if spec.kind != DisorderKind::BinaryAlloy {
        return 0;
    }
    let n = lattice.site_qubits();
    comparator(spec.p, n, spec.keyed().eval(site as u64, n))
}

pub fn atom_types(spec: &DisorderSpec, lattice: &LatticeSpec) -> Vec<u8> {
    if spec.kind != DisorderKind::BinaryAlloy {
        return vec![0; lattice.num_sites()];
    }
    let n = lattice.site_qubits();
    let f = spec.keyed();
    (0..lattice.num_sites())
        .map(|i| comparator(spec.p, n, f.eval(i as u64, n)))
        .collect()
}

/// Displacement vector of `site` in length units.
///
/// Component `a` is `w (2u - 1)` with `u` the keyed output on input
/// `site * D + a` scaled to `[0, 1)`.
pub fn sample_displacement(spec: &DisorderSpec, lattice: &LatticeSpec, site: usize) -> Vec<f64> {
    let d = lattice.dimension();
    if spec.kind != DisorderKind::Structural || spec.half_width == 0.0 {
        return vec![0.0; d];
    }
    let f = spec.keyed();
    displacement_with(&f, spec, d, site)
}

fn displacement_with(f: &KeyedFunction, spec: &DisorderSpec, dim: usize, site: usize) -> Vec<f64> {
    let scale = (1u64 << spec.displacement_bits) as f64;
    (0..dim)
        .map(|axis| {
            let u = f.eval((site * dim + axis) as u64, spec.displacement_bits) as f64 / scale;
            spec.half_width * (2.0 * u - 1.0)
        })
        .collect()
}

/// Displaced positions of all sites.
pub fn displaced_positions(spec: &DisorderSpec, lattice: &LatticeSpec) -> Vec<Vec<f64>> {
    let d = lattice.dimension();
    let structural = spec.kind == DisorderKind::Structural && spec.half_width != 0.0;
    let f = spec.keyed();
    (0..lattice.num_sites())
        .map(|i| {
            let mut pos = lattice.position(i);
            if structural {
                for (x, u) in pos.iter_mut().zip(displacement_with(&f, spec, d, i)) {
                    *x += u;
                }
            }
            pos
        })
        .collect()
}

/// Raw quantized phase drawn for column `site`, slot `slot`.
pub fn raw_phase_bits(
    f: &KeyedFunction,
    spec: &DisorderSpec,
    sparsity: usize,
    site: usize,
    slot: usize,
) -> u64 {
    f.eval((sparsity * site + slot) as u64, spec.bits)
}

/// Antisymmetrized quantized Peierls phase `φ̃` for column `site`, slot
/// `slot` leading to row `row` through slot `reverse` of that row.
///
/// The phase is drawn on whichever of the two keyed inputs is smaller and
/// negated modulo `M` on the other, so `φ̃(i,j) + φ̃(j,i) ≡ 0`.
pub fn quantized_phase(
    f: &KeyedFunction,
    spec: &DisorderSpec,
    sparsity: usize,
    site: usize,
    slot: usize,
    row: usize,
    reverse: usize,
) -> u64 {
    if spec.kind != DisorderKind::Magnetic {
        return 0;
    }
    let mine = sparsity * site + slot;
    let theirs = sparsity * row + reverse;
    let m = 1u64 << spec.bits;
    match mine.cmp(&theirs) {
        std::cmp::Ordering::Less => raw_phase_bits(f, spec, sparsity, site, slot),
        std::cmp::Ordering::Greater => (m - raw_phase_bits(f, spec, sparsity, row, reverse)) % m,
        std::cmp::Ordering::Equal => 0,
    }
}

/// Peierls phase in radians for the stored pair; lies in `[0, 2π)`.
pub fn sample_peierls_phase(
    spec: &DisorderSpec,
    lattice: &LatticeSpec,
    site: usize,
    slot: usize,
) -> f64 {
    let offsets = lattice.offsets();
    let s = offsets.len();
    let reverse = LatticeSpec::reverse_slot(&offsets, slot);
    let Some(row) = lattice.neighbor(site, &offsets[slot]) else {
        return 0.0;
    };
    let q = quantized_phase(&spec.keyed(), spec, s, site, slot, row, reverse);
    2.0 * PI * q as f64 / (1u64 << spec.bits) as f64
}
