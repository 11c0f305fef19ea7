use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::disorder::{
    atom_types, displaced_positions, quantized_phase, sample_displacement, DisorderKind,
    DisorderSpec,
};
use super::geometry::LatticeSpec;
use super::keyed::KeyedFunction;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, SparseMatrix, C64, ZERO};

/// Sparse Hermitian hopping matrix with its sub-normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct HoppingMatrix {
    pub matrix: SparseMatrix,
    /// Sub-normalization `α = 2 s max(1, max |t_ab|)`.
    pub alpha: f64,
    /// Upper bound on nonzeros per row, `2 s`.
    pub row_bound: usize,
}

impl HoppingMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix.get(i, j)
    }

    pub fn triples(&self) -> Vec<(usize, usize, C64)> {
        self.matrix.triples()
    }

    pub fn to_dense(&self) -> CMatrix {
        self.matrix.to_dense()
    }

    /// Dense form, refused above `cap` rows.
    pub fn to_dense_capped(&self, cap: usize) -> Result<CMatrix> {
        if self.dim() > cap {
            return Err(Error::Size(format!(
                "dense {0}×{0} matrix above cap {cap}",
                self.dim()
            )));
        }
        Ok(self.to_dense())
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.matrix.hermitian_defect()
    }

    /// `row col re im` lines in row-major order.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = format!("# dim {} alpha {:e}\n", self.dim(), self.alpha);
        for (i, j, v) in self.triples() {
            writeln!(out, "{i} {j} {:e} {:e}", v.re, v.im).expect("write to string");
        }
        out
    }
}

/// A lattice with one disorder realization sampled: atom types, displaced
/// positions and the keyed phase function, ready for matrix assembly.
#[derive(Clone, Debug)]
pub struct DisorderedLattice {
    pub lattice: LatticeSpec,
    pub disorder: DisorderSpec,
    offsets: Vec<Vec<i64>>,
    reverse: Vec<usize>,
    types: Vec<u8>,
    positions: Vec<Vec<f64>>,
    displacements: Vec<Vec<f64>>,
    keyed: KeyedFunction,
    d_max: f64,
}

/// Geometry of one stored `(column, slot)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Bond {
    pub row: usize,
    /// Displacement from the column site to the row site.
    pub vector: Vec<f64>,
    pub distance_bits: u64,
    pub phase_bits: u64,
}

impl DisorderedLattice {
    pub fn new(lattice: &LatticeSpec, disorder: &DisorderSpec) -> Result<Self> {
        lattice.validate()?;
        disorder.validate(lattice)?;
        let offsets = lattice.offsets();
        let reverse = (0..offsets.len())
            .map(|l| LatticeSpec::reverse_slot(&offsets, l))
            .collect();
        let displacements = (0..lattice.num_sites())
            .map(|i| sample_displacement(disorder, lattice, i))
            .collect();
        Ok(DisorderedLattice {
            displacements,
            lattice: lattice.clone(),
            disorder: disorder.clone(),
            reverse,
            types: atom_types(disorder, lattice),
            positions: displaced_positions(disorder, lattice),
            keyed: disorder.keyed(),
            d_max: disorder.distance_bound(lattice),
            offsets,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.lattice.num_sites()
    }

    pub fn sparsity(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[Vec<i64>] {
        &self.offsets
    }

    pub fn reverse_slot(&self, slot: usize) -> usize {
        self.reverse[slot]
    }

    pub fn atom_type(&self, site: usize) -> u8 {
        self.types[site]
    }

    pub fn atom_types(&self) -> &[u8] {
        &self.types
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn distance_bound(&self) -> f64 {
        self.d_max
    }

    /// Register width `m` of the distance and phase oracles.
    pub fn bits(&self) -> u32 {
        self.disorder.bits
    }

    pub fn alpha(&self) -> f64 {
        2.0 * self.sparsity() as f64 * self.disorder.max_hopping()
    }

    /// `γ̃_ab`: decay per unit of quantized distance.
    pub fn quantized_decay(&self, a: usize, b: usize) -> f64 {
        self.disorder.decay[a][b] * self.d_max / (1u64 << self.bits()) as f64
    }

    /// Row index `c(j, l)` with open-boundary slots padded to `j`.
    pub fn column_index(&self, site: usize, slot: usize) -> usize {
        self.lattice
            .neighbor(site, &self.offsets[slot])
            .unwrap_or(site)
    }

    pub fn is_valid_slot(&self, site: usize, slot: usize) -> bool {
        self.lattice.neighbor(site, &self.offsets[slot]).is_some()
    }

    fn raw_vector(&self, site: usize, slot: usize, row: usize) -> Vec<f64> {
        let a = self.lattice.lattice_constant;
        self.offsets[slot]
            .iter()
            .enumerate()
            .map(|(axis, &k)| {
                k as f64 * a + self.displacements[row][axis] - self.displacements[site][axis]
            })
            .collect()
    }

    /// Geometry of column `site`, slot `slot`, or `None` for a padded slot.
    ///
    /// The displacement is evaluated from whichever end has the smaller
    /// keyed input `s·j + l` and negated for the other, so both directions
    /// of a bond see bit-identical distances.
    pub fn bond(&self, site: usize, slot: usize) -> Option<Bond> {
        let row = self.lattice.neighbor(site, &self.offsets[slot])?;
        let s = self.sparsity();
        let rev = self.reverse[slot];
        let vector = if slot == 0 {
            vec![0.0; self.lattice.dimension()]
        } else if s * site + slot <= s * row + rev {
            self.raw_vector(site, slot, row)
        } else {
            self.raw_vector(row, rev, site)
                .into_iter()
                .map(|x| -x)
                .collect()
        };
        let distance = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        let m = 1u64 << self.bits();
        let distance_bits = ((distance / self.d_max * m as f64).floor() as u64).min(m - 1);
        let phase_bits = quantized_phase(&self.keyed, &self.disorder, s, site, slot, row, rev);
        Some(Bond {
            row,
            vector,
            distance_bits,
            phase_bits,
        })
    }

    /// `d̃ d_max / M`: the distance the quantum oracle sees.
    pub fn quantized_distance(&self, distance_bits: u64) -> f64 {
        distance_bits as f64 * self.d_max / (1u64 << self.bits()) as f64
    }

    /// Hopping value from a type-`b` column to a type-`a` row along `bond`.
    pub fn hop_value(&self, a: usize, b: usize, slot: usize, bond: &Bond) -> C64 {
        let (t, gamma) = self.disorder.amplitude(a, b, slot == 0);
        if t == 0.0 {
            return ZERO;
        }
        let magnitude = t * (-gamma * self.quantized_distance(bond.distance_bits)).exp();
        self.phase_factor(bond.phase_bits) * magnitude
    }

    /// `e^{2πi φ̃/M}` with the half turn pinned to exactly `−1`, so a phase
    /// and its negation modulo `M` always conjugate each other exactly.
    pub fn phase_factor(&self, phase_bits: u64) -> C64 {
        let m = 1u64 << self.bits();
        if 2 * (phase_bits % m) == m {
            return C64::new(-1.0, 0.0);
        }
        C64::from_polar(1.0, self.phase_angle(phase_bits))
    }

    /// `2π φ̃ / M` mapped into `(-π, π]` so opposite phases are exact
    /// negatives of each other.
    pub fn phase_angle(&self, phase_bits: u64) -> f64 {
        let m = 1i64 << self.bits();
        let mut q = phase_bits as i64;
        if 2 * q > m {
            q -= m;
        }
        2.0 * PI * q as f64 / m as f64
    }

    fn column_triples<F>(&self, emit: F) -> Vec<(usize, usize, C64)>
    where
        F: Fn(usize, usize, &Bond) -> Vec<(usize, usize, C64)> + Sync,
    {
        let per_column: Vec<Vec<(usize, usize, C64)>> = (0..self.num_sites())
            .into_par_iter()
            .map(|j| {
                let mut out = Vec::new();
                for l in 0..self.sparsity() {
                    if let Some(bond) = self.bond(j, l) {
                        out.extend(emit(j, l, &bond));
                    }
                }
                out
            })
            .collect();
        per_column.into_iter().flatten().collect()
    }

    /// The physical hopping matrix `h^A`.
    pub fn hopping(&self) -> HoppingMatrix {
        let triples = self.column_triples(|j, l, bond| {
            let a = self.types[bond.row] as usize;
            let b = self.types[j] as usize;
            vec![(bond.row, j, self.hop_value(a, b, l, bond))]
        });
        self.wrap(SparseMatrix::from_triples(self.num_sites(), &triples))
    }

    /// The doubled matrix `h̃` on the (site, type) space, index `2 i + a`,
    /// holding every type combination.
    pub fn doubled_hopping(&self) -> HoppingMatrix {
        let triples = self.column_triples(|j, l, bond| {
            let mut out = Vec::with_capacity(4);
            for a in 0..2 {
                for b in 0..2 {
                    out.push((2 * bond.row + a, 2 * j + b, self.hop_value(a, b, l, bond)));
                }
            }
            out
        });
        self.wrap(SparseMatrix::from_triples(2 * self.num_sites(), &triples))
    }

    /// Diagonal of the type projector `P^A` on the doubled space.
    pub fn type_projector_diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; 2 * self.num_sites()];
        for (i, &g) in self.types.iter().enumerate() {
            d[2 * i + g as usize] = 1.0;
        }
        d
    }

    /// `h̃^A = P^A h̃ P^A`.
    pub fn projected_doubled_hopping(&self) -> HoppingMatrix {
        let triples = self.column_triples(|j, l, bond| {
            let a = self.types[bond.row] as usize;
            let b = self.types[j] as usize;
            vec![(2 * bond.row + a, 2 * j + b, self.hop_value(a, b, l, bond))]
        });
        self.wrap(SparseMatrix::from_triples(2 * self.num_sites(), &triples))
    }

    /// Velocity operator along `axis` using bond displacement vectors, so
    /// periodic wrap-around bonds get their short displacement.
    pub fn velocity(&self, axis: usize) -> Result<HoppingMatrix> {
        if axis >= self.lattice.dimension() {
            return Err(Error::Config(format!(
                "axis {axis} outside a {}-dimensional lattice",
                self.lattice.dimension()
            )));
        }
        let triples = self.column_triples(|j, l, bond| {
            if l == 0 {
                return Vec::new();
            }
            let a = self.types[bond.row] as usize;
            let b = self.types[j] as usize;
            let v = self.hop_value(a, b, l, bond) * C64::new(0.0, bond.vector[axis]);
            vec![(bond.row, j, v)]
        });
        Ok(self.wrap(SparseMatrix::from_triples(self.num_sites(), &triples)))
    }

    fn wrap(&self, matrix: SparseMatrix) -> HoppingMatrix {
        HoppingMatrix {
            matrix,
            alpha: self.alpha(),
            row_bound: 2 * self.sparsity(),
        }
    }
}

/// Assembles the disordered hopping matrix `h^A`.
pub fn assemble_hopping_matrix(
    lattice: &LatticeSpec,
    disorder: &DisorderSpec,
) -> Result<HoppingMatrix> {
    Ok(DisorderedLattice::new(lattice, disorder)?.hopping())
}

/// `[v]_ij = i h_ij (x_i - x_j)` along `axis` from explicit positions; the
/// diagonal drops out.
pub fn assemble_velocity_operator(
    h: &HoppingMatrix,
    positions: &[Vec<f64>],
    axis: usize,
) -> Result<HoppingMatrix> {
    if positions.len() != h.dim() {
        return Err(Error::Contract(format!(
            "{} positions for a {}-site matrix",
            positions.len(),
            h.dim()
        )));
    }
    let mut triples = Vec::new();
    for (i, j, v) in h.triples() {
        if i == j {
            continue;
        }
        let dx = positions[i][axis] - positions[j][axis];
        triples.push((i, j, v * C64::new(0.0, dx)));
    }
    Ok(HoppingMatrix {
        matrix: SparseMatrix::from_triples(h.dim(), &triples),
        alpha: h.alpha,
        row_bound: h.row_bound,
    })
}

/// Model definition: lattice block and disorder block (which carries the key).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub lattice: LatticeSpec,
    pub disorder: DisorderSpec,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("model config: {e}")))?;
        cfg.lattice.validate()?;
        cfg.disorder.validate(&cfg.lattice)?;
        Ok(cfg)
    }

    pub fn build(&self) -> Result<DisorderedLattice> {
        DisorderedLattice::new(&self.lattice, &self.disorder)
    }

    pub fn is_clean(&self) -> bool {
        self.disorder.kind == DisorderKind::None
    }
}
