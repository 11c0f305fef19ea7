use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::circuit::{Circuit, Gate};
use super::BlockEncoding;
use crate::error::{Error, Result};
use crate::lattice::disorder::{comparator, DisorderKind};
use crate::lattice::DisorderedLattice;
use crate::linalg::{max_abs_diff, CMatrix, C64, ONE, ZERO};

/// Limits on encoding construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingOptions {
    /// Total qubit budget of the simulated circuit.
    pub max_qubits: usize,
    /// Largest standalone oracle materialized as a dense matrix.
    pub dense_qubits: usize,
}

impl Default for EncodingOptions {
    fn default() -> Self {
        EncodingOptions {
            max_qubits: 48,
            dense_qubits: 12,
        }
    }
}

/// Tabulated sparse-access oracles `c(j,l)`, `d̃_lj`, `φ̃_lj`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseAccessOracles {
    pub num_sites: usize,
    pub sparsity: usize,
    pub slot_qubits: usize,
    pub bits: u32,
    columns: Vec<usize>,
    routes: Vec<usize>,
    valid: Vec<bool>,
    distances: Vec<u64>,
    phases: Vec<u64>,
}

fn qubits_for(count: usize) -> usize {
    (usize::BITS - (count.max(1) - 1).leading_zeros()) as usize
}

impl SparseAccessOracles {
    pub fn from_model(model: &DisorderedLattice) -> Self {
        let n = model.num_sites();
        let s = model.sparsity();
        let mut columns = Vec::with_capacity(n * s);
        let mut routes = Vec::with_capacity(n * s);
        let mut valid = Vec::with_capacity(n * s);
        let mut distances = Vec::with_capacity(n * s);
        let mut phases = Vec::with_capacity(n * s);
        for j in 0..n {
            for l in 0..s {
                columns.push(model.column_index(j, l));
                routes.push(model.lattice.wrapped_neighbor(j, &model.offsets()[l]));
                match model.bond(j, l) {
                    Some(b) => {
                        valid.push(true);
                        distances.push(b.distance_bits);
                        phases.push(b.phase_bits);
                    }
                    None => {
                        valid.push(false);
                        distances.push(0);
                        phases.push(0);
                    }
                }
            }
        }
        SparseAccessOracles {
            num_sites: n,
            sparsity: s,
            slot_qubits: qubits_for(s),
            bits: model.bits(),
            columns,
            routes,
            valid,
            distances,
            phases,
        }
    }

    fn at(&self, l: usize, j: usize) -> usize {
        assert!(
            l < self.sparsity && j < self.num_sites,
            "slot {l} or site {j} out of range"
        );
        j * self.sparsity + l
    }

    /// `c(j, l)`; padded open-boundary slots return `j`.
    pub fn column_index(&self, l: usize, j: usize) -> usize {
        self.columns[self.at(l, j)]
    }

    /// Image of `(l, j)` under the permutation `O_c`. Agrees with
    /// [`Self::column_index`] on real slots; padded slots follow the
    /// periodic image so the map stays bijective for each `l`.
    pub fn route(&self, l: usize, j: usize) -> usize {
        self.routes[self.at(l, j)]
    }

    pub fn is_valid(&self, l: usize, j: usize) -> bool {
        self.valid[self.at(l, j)]
    }

    /// `(d̃_lj, φ̃_lj)`.
    pub fn geometry(&self, l: usize, j: usize) -> (u64, u64) {
        let k = self.at(l, j);
        (self.distances[k], self.phases[k])
    }

    fn site_qubits(&self) -> usize {
        self.num_sites.trailing_zeros() as usize
    }

    fn check_dense(&self, extra: usize, cap: usize) -> Result<usize> {
        let q = self.slot_qubits + self.site_qubits() + extra;
        if q > cap {
            return Err(Error::Size(format!(
                "dense oracle on {q} qubits exceeds the cap of {cap}"
            )));
        }
        Ok(1 << q)
    }

    /// `O_c` on `|l⟩|j⟩` with basis index `l + 2^{slot qubits} j`. Slot
    /// values `l ≥ s` act as the identity.
    pub fn column_index_unitary(&self, cap_qubits: usize) -> Result<CMatrix> {
        let dim = self.check_dense(0, cap_qubits)?;
        let ls = 1usize << self.slot_qubits;
        let mut u = CMatrix::zeros(dim, dim);
        for j in 0..self.num_sites {
            for l in 0..ls {
                let i = if l < self.sparsity {
                    self.route(l, j)
                } else {
                    j
                };
                u[(l + ls * i, l + ls * j)] = ONE;
            }
        }
        Ok(u)
    }

    fn register_unitary(
        &self,
        cap_qubits: usize,
        value: impl Fn(usize, usize) -> u64,
    ) -> Result<CMatrix> {
        let m = self.bits as usize;
        let dim = self.check_dense(m, cap_qubits)?;
        let ls = 1usize << self.slot_qubits;
        let stride = ls * self.num_sites;
        let mut u = CMatrix::zeros(dim, dim);
        for y in 0..1usize << m {
            for j in 0..self.num_sites {
                for l in 0..ls {
                    let v = if l < self.sparsity {
                        value(l, j) as usize
                    } else {
                        0
                    };
                    u[(l + ls * j + stride * (y ^ v), l + ls * j + stride * y)] = ONE;
                }
            }
        }
        Ok(u)
    }

    /// `O_d |l⟩|j⟩|y⟩ = |l⟩|j⟩|y ⊕ d̃_lj⟩`.
    pub fn distance_unitary(&self, cap_qubits: usize) -> Result<CMatrix> {
        self.register_unitary(cap_qubits, |l, j| self.geometry(l, j).0)
    }

    /// `O_φ |l⟩|j⟩|y⟩ = |l⟩|j⟩|y ⊕ φ̃_lj⟩`.
    pub fn phase_unitary(&self, cap_qubits: usize) -> Result<CMatrix> {
        self.register_unitary(cap_qubits, |l, j| self.geometry(l, j).1)
    }
}

/// `t e^{-γ̃ d̃}`: what the amplitude oracle must produce.
pub fn amplitude_oracle_value(gamma: f64, t: f64, distance_bits: u64) -> f64 {
    t * (-gamma * distance_bits as f64).exp()
}

fn dilation(c: f64) -> [C64; 4] {
    let s = (1.0 - c * c).max(0.0).sqrt();
    [
        C64::new(c, 0.0),
        C64::new(-s, 0.0),
        C64::new(s, 0.0),
        C64::new(c, 0.0),
    ]
}

/// Block-encoding of `diag_d̃(t e^{-γ̃ d̃})` on an `m`-qubit distance
/// register: one dilation flag per bit `k` carrying
/// `|t|^{1/m} e^{-γ̃ 2^k d̃_k}`, and the sign of `t` as a phase.
pub fn build_amplitude_oracle(gamma: f64, t: f64, m: usize) -> Result<BlockEncoding> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!(
            "decay {gamma} is negative; amplitudes would exceed one"
        )));
    }
    if !(t.abs() <= 1.0) {
        return Err(Error::Contract(format!(
            "|t| = {} must be folded into the sub-normalization",
            t.abs()
        )));
    }
    if m == 0 || 2 * m > 62 {
        return Err(Error::Config(format!("register width {m} out of range")));
    }
    let mut c = Circuit::new(2 * m);
    let root = t.abs().powf(1.0 / m as f64);
    for k in 0..m {
        let factor = (-gamma * (1u64 << k) as f64).exp();
        c.push(
            format!("U_{k}"),
            Gate::Rotation {
                controls: vec![k],
                target: m + k,
                matrices: vec![dilation(root), dilation(root * factor)],
            },
        );
    }
    if t < 0.0 {
        c.push(
            "sign",
            Gate::Phase {
                qubits: vec![0],
                phases: vec![-ONE, -ONE],
            },
        );
    }
    Ok(BlockEncoding::from_circuit(c, 1.0, m))
}

/// `e^{i 2π φ̃ / M}`.
pub fn phase_oracle_value(phase_bits: u64, m: u32) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * phase_bits as f64 / (1u64 << m) as f64)
}

fn phase_gates(qubits: &[usize]) -> Vec<(String, Gate)> {
    let m = qubits.len();
    qubits
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            let angle = 2.0 * PI * (1u64 << k) as f64 / (1u64 << m) as f64;
            (
                format!("R_{k}"),
                Gate::Phase {
                    qubits: vec![q],
                    phases: vec![ONE, C64::from_polar(1.0, angle)],
                },
            )
        })
        .collect()
}

/// `O_p = ∏_k R_k` with `R_k = diag(1, e^{i2π 2^k/M})`, as a dense matrix.
pub fn build_phase_oracle(m: usize) -> Result<CMatrix> {
    if m == 0 || m > 16 {
        return Err(Error::Config(format!(
            "phase register width {m} out of range"
        )));
    }
    let mut c = Circuit::new(m);
    for (label, g) in phase_gates(&(0..m).collect::<Vec<_>>()) {
        c.push(label, g);
    }
    c.to_dense(m)
}

/// Qubit assignment of the full encoding.
///
/// From the least significant bit: the atom-type bit and the site register
/// (together the system), then the slot register, the row-type selector, the
/// distance and phase registers, the padded-slot flag, one dilation flag per
/// distance bit, the keyed-function register, the comparator bit and the two
/// projector flags.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingLayout {
    pub type_bit: usize,
    pub site: Vec<usize>,
    pub slot: Vec<usize>,
    pub row_type: usize,
    pub distance: Vec<usize>,
    pub phase: Vec<usize>,
    pub padded: usize,
    pub amplitude_flags: Vec<usize>,
    pub keyed: Vec<usize>,
    pub comparator: usize,
    pub right_flag: usize,
    pub left_flag: usize,
    pub num_qubits: usize,
}

impl EncodingLayout {
    pub fn new(model: &DisorderedLattice) -> Self {
        let n = model.lattice.site_qubits() as usize;
        let m = model.bits() as usize;
        let ls = qubits_for(model.sparsity());
        let mut next = 0;
        let mut take = |k: usize| {
            let r: Vec<usize> = (next..next + k).collect();
            next += k;
            r
        };
        let type_bit = take(1)[0];
        let site = take(n);
        let slot = take(ls);
        let row_type = take(1)[0];
        let distance = take(m);
        let phase = take(m);
        let padded = take(1)[0];
        let amplitude_flags = take(m);
        let keyed = take(n);
        let comparator = take(1)[0];
        let right_flag = take(1)[0];
        let left_flag = take(1)[0];
        EncodingLayout {
            type_bit,
            site,
            slot,
            row_type,
            distance,
            phase,
            padded,
            amplitude_flags,
            keyed,
            comparator,
            right_flag,
            left_flag,
            num_qubits: next,
        }
    }

    pub fn system_qubits(&self) -> usize {
        1 + self.site.len()
    }
}

/// Gates of the type projector `U_P`: keyed function into the keyed
/// register, comparator, flag `⊕= c ⊕ b`, then explicit uncomputation.
fn projector_gates(
    model: &DisorderedLattice,
    site: &[usize],
    type_bit: usize,
    keyed: &[usize],
    cmp: usize,
    flag: usize,
) -> Vec<(String, Gate)> {
    let n = site.len() as u32;
    let f = model.disorder.keyed();
    let alloy = model.disorder.kind == DisorderKind::BinaryAlloy;
    let keyed_table: Vec<u64> = (0..1u64 << n).map(|j| f.eval(j, n)).collect();
    let cmp_table: Vec<u64> = (0..1u64 << n)
        .map(|o| {
            if alloy {
                comparator(model.disorder.p, n, o) as u64
            } else {
                0
            }
        })
        .collect();
    let f_gate = Gate::Xor {
        inputs: site.to_vec(),
        targets: keyed.to_vec(),
        table: keyed_table,
    };
    let c_gate = Gate::Xor {
        inputs: keyed.to_vec(),
        targets: vec![cmp],
        table: cmp_table,
    };
    vec![
        ("F_k".into(), f_gate.clone()),
        ("C_p".into(), c_gate.clone()),
        (
            "CNOT".into(),
            Gate::Xor {
                inputs: vec![cmp, type_bit],
                targets: vec![flag],
                table: vec![0, 1, 1, 0],
            },
        ),
        ("C_p†".into(), c_gate),
        ("F_k†".into(), f_gate),
    ]
}

/// Block-encoding of the type projector `P^A` on the (site, type) space,
/// index `2 i + a`, with `α = 1`.
pub fn build_type_projector(model: &DisorderedLattice) -> Result<BlockEncoding> {
    let n = model.lattice.site_qubits() as usize;
    let total = 2 * n + 3;
    if total > 62 {
        return Err(Error::Size(format!("{total} qubits in the type projector")));
    }
    let site: Vec<usize> = (1..=n).collect();
    let keyed: Vec<usize> = (n + 1..2 * n + 1).collect();
    let mut c = Circuit::new(total);
    for (label, g) in projector_gates(model, &site, 0, &keyed, 2 * n + 1, 2 * n + 2) {
        c.push(label, g);
    }
    Ok(BlockEncoding::from_circuit(c, 1.0, n + 1))
}

/// Householder reflection sending `|0⟩` to the uniform superposition over
/// the first `count` of `dim` basis states.
fn uniform_preparation(count: usize, dim: usize) -> CMatrix {
    let amp = 1.0 / (count as f64).sqrt();
    let mut w = nalgebra::DVector::<f64>::zeros(dim);
    w[0] = 1.0;
    for k in 0..count {
        w[k] -= amp;
    }
    let norm2 = w.norm_squared();
    let mut h = nalgebra::DMatrix::<f64>::identity(dim, dim);
    if norm2 > 0.0 {
        h -= (&w * w.transpose()) * (2.0 / norm2);
    }
    h.map(|x| C64::new(x, 0.0))
}

/// Full block-encoding of `h̃^A = P^A h̃ P^A` with `α = 2 s max(1, max|t_ab|)`.
///
/// Right to left: `U_P`, slot and row-type preparation `D`, `O_d`, padded
/// flag, `O_φ`, the amplitude dilations `O_e^{ab}` selected by the row type
/// and the column type, the sign of `t_ab`, `O_p`, uncomputation of `O_φ`
/// and `O_d`, `O_c`, a swap of the row-type selector into the type bit,
/// `D†`, and `U_P` with a fresh flag.
pub fn assemble_full_encoding(
    model: &DisorderedLattice,
    options: &EncodingOptions,
) -> Result<BlockEncoding> {
    let layout = EncodingLayout::new(model);
    if layout.num_qubits > options.max_qubits.min(63) {
        return Err(Error::Size(format!(
            "full encoding needs {} qubits, above the budget of {}",
            layout.num_qubits, options.max_qubits
        )));
    }
    let oracles = SparseAccessOracles::from_model(model);
    let s = oracles.sparsity;
    let ls = 1usize << layout.slot.len();
    let n_sites = model.num_sites();
    let m = model.bits() as usize;
    let tmax = model.disorder.max_hopping();
    let mut c = Circuit::new(layout.num_qubits);

    let right = projector_gates(
        model,
        &layout.site,
        layout.type_bit,
        &layout.keyed,
        layout.comparator,
        layout.right_flag,
    );
    for (label, g) in right {
        c.push(format!("{label} (right)"), g);
    }

    let mut prep_qubits = layout.slot.clone();
    prep_qubits.push(layout.row_type);
    let prep = uniform_preparation(2 * s, 2 * ls);
    let prep = reorder_row_type(&prep, s, ls);
    c.push(
        "D",
        Gate::Dense {
            qubits: prep_qubits.clone(),
            matrix: prep.clone(),
        },
    );

    // Geometry oracles read (site, slot), x = j + N l.
    let mut geometry_inputs = layout.site.clone();
    geometry_inputs.extend(&layout.slot);
    let table = |f: &dyn Fn(usize, usize) -> u64| -> Vec<u64> {
        (0..ls)
            .flat_map(|l| (0..n_sites).map(move |j| (l, j)))
            .map(|(l, j)| if l < s { f(l, j) } else { 0 })
            .collect()
    };
    let o_d = Gate::Xor {
        inputs: geometry_inputs.clone(),
        targets: layout.distance.clone(),
        table: table(&|l, j| oracles.geometry(l, j).0),
    };
    let o_phi = Gate::Xor {
        inputs: geometry_inputs.clone(),
        targets: layout.phase.clone(),
        table: table(&|l, j| oracles.geometry(l, j).1),
    };
    let padded: Vec<u64> = (0..ls)
        .flat_map(|l| (0..n_sites).map(move |j| (l, j)))
        .map(|(l, j)| u64::from(l >= s || !oracles.is_valid(l, j)))
        .collect();
    c.push("O_d", o_d.clone());
    c.push(
        "padded",
        Gate::Xor {
            inputs: geometry_inputs,
            targets: vec![layout.padded],
            table: padded,
        },
    );
    c.push("O_phi", o_phi.clone());

    // Controls: (d_k, row type a, column type b, slot bits); the self slot
    // may carry an on-site amplitude of its own.
    for k in 0..m {
        let mut controls = vec![layout.distance[k], layout.row_type, layout.type_bit];
        controls.extend(&layout.slot);
        let matrices = (0..8 * ls)
            .map(|x| {
                let bit = x & 1;
                let a = (x >> 1) & 1;
                let b = (x >> 2) & 1;
                let l = x >> 3;
                let (t, _) = model.disorder.amplitude(a, b, l == 0);
                let gamma = model.quantized_decay(a, b);
                let decay = if bit == 1 {
                    (-gamma * (1u64 << k) as f64).exp()
                } else {
                    1.0
                };
                dilation((t.abs() / tmax).powf(1.0 / m as f64) * decay)
            })
            .collect();
        c.push(
            format!("O_e U_{k}"),
            Gate::Rotation {
                controls,
                target: layout.amplitude_flags[k],
                matrices,
            },
        );
    }
    let mut sign_qubits = vec![layout.row_type, layout.type_bit];
    sign_qubits.extend(&layout.slot);
    let signs = (0..4 * ls)
        .map(|x| {
            let (t, _) = model.disorder.amplitude(x & 1, (x >> 1) & 1, x >> 2 == 0);
            if t < 0.0 {
                -ONE
            } else {
                ONE
            }
        })
        .collect();
    c.push(
        "sign t_ab",
        Gate::Phase {
            qubits: sign_qubits,
            phases: signs,
        },
    );
    for (label, g) in phase_gates(&layout.phase) {
        c.push(format!("O_p {label}"), g);
    }
    c.push("O_phi†", o_phi);
    c.push("O_d†", o_d);

    let tables = (0..ls)
        .map(|l| {
            (0..n_sites)
                .map(|j| {
                    if l < s {
                        oracles.route(l, j) as u64
                    } else {
                        j as u64
                    }
                })
                .collect()
        })
        .collect();
    c.push(
        "O_c",
        Gate::Permutation {
            controls: layout.slot.clone(),
            targets: layout.site.clone(),
            tables,
        },
    );
    c.push("SWAP", Gate::swap(layout.row_type, layout.type_bit));
    c.push(
        "D†",
        Gate::Dense {
            qubits: prep_qubits,
            matrix: prep.adjoint(),
        },
    );

    let left = projector_gates(
        model,
        &layout.site,
        layout.type_bit,
        &layout.keyed,
        layout.comparator,
        layout.left_flag,
    );
    for (label, g) in left {
        c.push(format!("{label} (left)"), g);
    }
    let mut be = BlockEncoding::from_circuit(c, model.alpha(), layout.system_qubits());
    be.queries = 1;
    Ok(be)
}

/// The preparation acts on `slot + ls · a'`; the Householder vector was
/// built on the first `2 s` indices, which must map to `l < s` for both
/// `a'`. Permute rows and columns accordingly.
fn reorder_row_type(prep: &CMatrix, s: usize, ls: usize) -> CMatrix {
    let dim = 2 * ls;
    // position p in the Householder basis → register index.
    let mut order: Vec<usize> = Vec::with_capacity(dim);
    for a in 0..2 {
        for l in 0..s {
            order.push(l + ls * a);
        }
    }
    for a in 0..2 {
        for l in s..ls {
            order.push(l + ls * a);
        }
    }
    let mut out = CMatrix::zeros(dim, dim);
    for (p, &i) in order.iter().enumerate() {
        for (q, &j) in order.iter().enumerate() {
            out[(i, j)] = prep[(p, q)];
        }
    }
    out
}

/// Max-entry deviation between `(h^A)^d` and `2 (I⊗⟨+|)(h̃^A)^d (I⊗|+⟩)`,
/// with `(h̃^A)^0 := P^A`.
pub fn verify_plus_projection(
    model: &DisorderedLattice,
    d: usize,
    cap_sites: usize,
) -> Result<f64> {
    let n = model.num_sites();
    if n > cap_sites {
        return Err(Error::Size(format!(
            "{n} sites exceed the dense cap of {cap_sites}"
        )));
    }
    let h = model.hopping().to_dense();
    let ht = model.projected_doubled_hopping().to_dense();
    let mut left = CMatrix::identity(n, n);
    for _ in 0..d {
        left = &left * &h;
    }
    let mut power = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        2 * n,
        model
            .type_projector_diagonal()
            .into_iter()
            .map(|x| C64::new(x, 0.0)),
    ));
    for _ in 0..d {
        power = &power * &ht;
    }
    // (I ⊗ |+⟩) maps site i to (|i,0⟩ + |i,1⟩)/√2.
    let mut right = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = ZERO;
            for a in 0..2 {
                for b in 0..2 {
                    acc += power[(2 * i + a, 2 * j + b)];
                }
            }
            right[(i, j)] = acc;
        }
    }
    Ok(max_abs_diff(&left, &right))
}
