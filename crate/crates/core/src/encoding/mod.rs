//! Block-encodings as explicit unitaries: the sparse-access oracles, the
//! type projector and the full encoding of the disordered hopping matrix.
//!
//! Qubit layout: system qubits occupy the low bits, ancillas the high bits.
//! The encoded block is the top-left `2^system × 2^system` corner, i.e. all
//! ancillas in `|0⟩`.

pub mod circuit;
pub mod oracles;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, unitarity_defect, CMatrix, C64, ZERO};
pub use circuit::{sparse_unitarity_defect, Circuit, Gate};
pub use oracles::{
    amplitude_oracle_value, assemble_full_encoding, build_amplitude_oracle, build_phase_oracle,
    build_type_projector, phase_oracle_value, verify_plus_projection, EncodingLayout,
    EncodingOptions, SparseAccessOracles,
};

/// Largest system register whose block is materialized densely.
pub const MAX_DENSE_BLOCK_QUBITS: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub enum Unitary {
    Dense(CMatrix),
    Circuit(Circuit),
}

/// A unitary `U` with `α (⟨0|^a ⊗ I) U (|0⟩^a ⊗ I) = A`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockEncoding {
    pub unitary: Unitary,
    pub alpha: f64,
    pub system_qubits: usize,
    pub ancilla_qubits: usize,
    /// Queries to the underlying encoding spent to build this one.
    pub queries: usize,
}

impl BlockEncoding {
    pub fn from_dense(u: CMatrix, alpha: f64, system_qubits: usize) -> Result<Self> {
        let dim = u.nrows();
        if !u.is_square() || !dim.is_power_of_two() || dim < 1 << system_qubits {
            return Err(Error::Contract(format!(
                "a {}×{} matrix cannot hold {system_qubits} system qubits",
                u.nrows(),
                u.ncols()
            )));
        }
        let total = dim.trailing_zeros() as usize;
        Ok(BlockEncoding {
            unitary: Unitary::Dense(u),
            alpha,
            system_qubits,
            ancilla_qubits: total - system_qubits,
            queries: 1,
        })
    }

    pub fn from_circuit(c: Circuit, alpha: f64, system_qubits: usize) -> Self {
        assert!(c.num_qubits >= system_qubits);
        let ancilla_qubits = c.num_qubits - system_qubits;
        BlockEncoding {
            unitary: Unitary::Circuit(c),
            alpha,
            system_qubits,
            ancilla_qubits,
            queries: 1,
        }
    }

    /// Halmos dilation `[[B, (I − BB†)^{1/2}], [(I − B†B)^{1/2}, −B†]]` of
    /// `B = a/α` on one extra ancilla; requires `‖a/α‖ ≤ 1`.
    pub fn dilation(a: &CMatrix, alpha: f64) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || !n.is_power_of_two() {
            return Err(Error::Contract(
                "dilation needs a square power-of-two matrix".into(),
            ));
        }
        let b = a / C64::new(alpha, 0.0);
        let norm = crate::linalg::spectral_norm(&b);
        if norm > 1.0 + 1e-10 {
            return Err(Error::Contract(format!("‖a/α‖ = {norm} exceeds one")));
        }
        let id = CMatrix::identity(n, n);
        let mut u = CMatrix::zeros(2 * n, 2 * n);
        u.view_mut((0, 0), (n, n)).copy_from(&b);
        u.view_mut((0, n), (n, n))
            .copy_from(&psd_sqrt(&(&id - &b * b.adjoint())));
        u.view_mut((n, 0), (n, n))
            .copy_from(&psd_sqrt(&(&id - b.adjoint() * &b)));
        u.view_mut((n, n), (n, n)).copy_from(&(-b.adjoint()));
        Self::from_dense(u, alpha, n.trailing_zeros() as usize)
    }

    pub fn identity(system_qubits: usize) -> Self {
        let d = 1usize << system_qubits;
        Self::from_dense(CMatrix::identity(d, d), 1.0, system_qubits).expect("square power of two")
    }

    pub fn total_qubits(&self) -> usize {
        self.system_qubits + self.ancilla_qubits
    }

    pub fn block_dim(&self) -> usize {
        1 << self.system_qubits
    }

    /// Column `input` of `U` as sorted sparse entries.
    pub fn column(&self, input: u64) -> Vec<(u64, C64)> {
        match &self.unitary {
            Unitary::Dense(u) => u
                .column(input as usize)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != ZERO)
                .map(|(i, v)| (i as u64, *v))
                .collect(),
            Unitary::Circuit(c) => c.column(input),
        }
    }

    /// Column `j` of the encoded matrix (already multiplied by `α`).
    pub fn block_column(&self, j: usize) -> Vec<C64> {
        let mut out = vec![ZERO; self.block_dim()];
        for (i, v) in self.column(j as u64) {
            if (i as usize) < self.block_dim() {
                out[i as usize] = v * self.alpha;
            }
        }
        out
    }

    pub fn adjoint(&self) -> BlockEncoding {
        let unitary = match &self.unitary {
            Unitary::Dense(u) => Unitary::Dense(u.adjoint()),
            Unitary::Circuit(c) => Unitary::Circuit(c.adjoint()),
        };
        BlockEncoding {
            unitary,
            ..self.clone()
        }
    }

    pub fn to_circuit(&self) -> Circuit {
        match &self.unitary {
            Unitary::Circuit(c) => c.clone(),
            Unitary::Dense(u) => {
                let mut c = Circuit::new(self.total_qubits());
                c.push(
                    "dense",
                    Gate::Dense {
                        qubits: (0..self.total_qubits()).collect(),
                        matrix: u.clone(),
                    },
                );
                c
            }
        }
    }

    /// `‖U†U − I‖`: exact for dense unitaries and for circuits up to
    /// `cap_qubits`; above that, the per-gate product bound.
    pub fn unitarity_defect(&self, cap_qubits: usize) -> Result<f64> {
        match &self.unitary {
            Unitary::Dense(u) => Ok(unitarity_defect(u)),
            Unitary::Circuit(c) if c.num_qubits <= cap_qubits => {
                c.unitarity_bound()?;
                Ok(sparse_unitarity_defect(&c.to_sparse(cap_qubits)?))
            }
            Unitary::Circuit(c) => c.unitarity_bound(),
        }
    }

    /// Metadata header plus nonzero unitary entries as `row col re im`.
    /// Circuits are materialized only up to `cap_qubits`.
    pub fn to_coordinate_text(&self, cap_qubits: usize) -> Result<String> {
        let mut out = format!(
            "# dim {} alpha {:e} system_qubits {} ancilla_qubits {}\n",
            self.block_dim(),
            self.alpha,
            self.system_qubits,
            self.ancilla_qubits
        );
        let entries = match &self.unitary {
            Unitary::Dense(u) => crate::linalg::SparseMatrix::from_dense(u).triples(),
            Unitary::Circuit(c) => c.to_sparse(cap_qubits)?.triples(),
        };
        for (i, j, v) in entries {
            writeln!(out, "{i} {j} {:e} {:e}", v.re, v.im).expect("write to string");
        }
        Ok(out)
    }
}

/// `α (⟨0|^a ⊗ I) U (|0⟩^a ⊗ I)` as a dense matrix.
pub fn extract_block(be: &BlockEncoding) -> Result<CMatrix> {
    if be.system_qubits > MAX_DENSE_BLOCK_QUBITS {
        return Err(Error::Size(format!(
            "{} system qubits exceed the dense block cap",
            be.system_qubits
        )));
    }
    let d = be.block_dim();
    let mut m = CMatrix::zeros(d, d);
    match &be.unitary {
        Unitary::Dense(u) => {
            m.copy_from(&u.view((0, 0), (d, d)));
            m *= C64::new(be.alpha, 0.0);
        }
        Unitary::Circuit(_) => {
            use rayon::prelude::*;
            let cols: Vec<Vec<C64>> = (0..d).into_par_iter().map(|j| be.block_column(j)).collect();
            for (j, col) in cols.into_iter().enumerate() {
                for (i, v) in col.into_iter().enumerate() {
                    m[(i, j)] = v;
                }
            }
        }
    }
    Ok(m)
}

/// Product encoding whose block is `block(a) · block(b)` with `α = α_a α_b`.
/// `b`'s ancillas sit directly above the system, `a`'s above those.
pub fn compose(a: &BlockEncoding, b: &BlockEncoding) -> Result<BlockEncoding> {
    if a.system_qubits != b.system_qubits {
        return Err(Error::Contract(
            "composed encodings must share the system register".into(),
        ));
    }
    let ns = a.system_qubits;
    let total = ns + a.ancilla_qubits + b.ancilla_qubits;
    if total > 63 {
        return Err(Error::Size(format!(
            "{total} qubits in the composed encoding"
        )));
    }
    let mut c = Circuit::new(total);
    for (label, g) in b.to_circuit().gates {
        c.push(label, g);
    }
    let shift = b.ancilla_qubits;
    for (label, g) in a.to_circuit().gates {
        c.push(label, g.remap(|q| if q < ns { q } else { q + shift }));
    }
    let mut out = BlockEncoding::from_circuit(c, a.alpha * b.alpha, ns);
    out.queries = a.queries + b.queries;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, ONE};

    fn random_unitary(dim: usize, seed: u64) -> CMatrix {
        // QR of a deterministic pseudo-random matrix.
        let mut x = seed;
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let re = (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let im = (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            C64::new(re, im)
        });
        a.qr().q()
    }

    #[test]
    fn identity_block() {
        let be = BlockEncoding::identity(2);
        assert_eq!(extract_block(&be).unwrap(), CMatrix::identity(4, 4));
    }

    #[test]
    fn adjoint_block_is_conjugate_transpose() {
        let be = BlockEncoding::from_dense(random_unitary(8, 3), 2.5, 2).unwrap();
        let b = extract_block(&be).unwrap();
        let bd = extract_block(&be.adjoint()).unwrap();
        assert!(max_abs_diff(&b.adjoint(), &bd) < 1e-15);
    }

    #[test]
    fn composition_multiplies_blocks() {
        let a = BlockEncoding::from_dense(random_unitary(8, 5), 1.5, 2).unwrap();
        let b = BlockEncoding::from_dense(random_unitary(16, 9), 3.0, 2).unwrap();
        let ab = compose(&a, &b).unwrap();
        assert_eq!(ab.ancilla_qubits, 3);
        let expected = extract_block(&a).unwrap() * extract_block(&b).unwrap();
        assert!(max_abs_diff(&extract_block(&ab).unwrap(), &expected) < 1e-13);
        assert!(ab.unitarity_defect(10).unwrap() < 1e-12);
    }

    #[test]
    fn dense_and_circuit_agree() {
        let u = random_unitary(8, 11);
        let be = BlockEncoding::from_dense(u.clone(), 1.0, 1).unwrap();
        let as_circuit = BlockEncoding::from_circuit(be.to_circuit(), 1.0, 1);
        assert!(
            max_abs_diff(
                &extract_block(&be).unwrap(),
                &extract_block(&as_circuit).unwrap()
            ) < 1e-15
        );
        assert_eq!(
            be.column(0)
                .iter()
                .map(|e| e.1.norm_sqr())
                .sum::<f64>()
                .round(),
            ONE.re
        );
    }
}
