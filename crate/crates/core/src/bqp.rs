//! Clock-Hamiltonian gadget: a gate circuit `C` becomes a Hermitian matrix
//! `h = (W + W†)/2` whose η-broadened LDOS at one site decides whether the
//! circuit outputs `1` with high or low probability.
//!
//! Ordering: work qubit 0 is the most significant bit of the work index and
//! is the output qubit. The clock is restricted to the `M` states
//! `0..M−1` and sits above the work register, so basis index
//! `clock · 2^r + work`. The input state `|0⟩_clock |x⟩ |0…0⟩` is therefore
//! index `j = x · 2^{r−n}`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{unitarity_defect, CMatrix, CVector, C64, ONE, ZERO};

/// Largest work register accepted by the dense construction.
const MAX_WORK_QUBITS: usize = 10;

/// A one- or two-qubit gate. For two wires the matrix basis is
/// `|w_0 w_1⟩` with `w_0` the more significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitGate {
    pub name: String,
    pub wires: Vec<usize>,
    pub matrix: CMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateCircuit {
    pub qubits: usize,
    pub gates: Vec<CircuitGate>,
    /// Input bits for the leading wires; the rest start in `|0⟩`.
    pub input: Vec<bool>,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn named_gate(name: &str) -> Option<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m = |n: usize, v: &[C64]| CMatrix::from_row_slice(n, n, v);
    Some(match name {
        "I" => CMatrix::identity(2, 2),
        "X" => m(2, &[ZERO, ONE, ONE, ZERO]),
        "Y" => m(2, &[ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]),
        "Z" => m(2, &[ONE, ZERO, ZERO, c(-1.0)]),
        "H" => m(2, &[c(s), c(s), c(s), c(-s)]),
        "S" => m(2, &[ONE, ZERO, ZERO, C64::new(0.0, 1.0)]),
        "T" => m(2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, PI / 4.0)]),
        "CNOT" => {
            let mut u = CMatrix::zeros(4, 4);
            for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                u[(i, j)] = ONE;
            }
            u
        }
        "CZ" => CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, ONE, c(-1.0)])),
        "SWAP" => {
            let mut u = CMatrix::zeros(4, 4);
            for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                u[(i, j)] = ONE;
            }
            u
        }
        _ => return None,
    })
}

impl CircuitGate {
    pub fn new(name: impl Into<String>, wires: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let k = wires.len();
        if !(1..=2).contains(&k) || matrix.nrows() != 1 << k || !matrix.is_square() {
            return Err(Error::Contract(format!(
                "a gate on {k} wires needs a {0}×{0} matrix",
                1 << k
            )));
        }
        if k == 2 && wires[0] == wires[1] {
            return Err(Error::Contract("two-qubit gate wires must differ".into()));
        }
        let defect = unitarity_defect(&matrix);
        if defect > 1e-12 {
            return Err(Error::Contract(format!(
                "gate matrix is not unitary (defect {defect:e})"
            )));
        }
        Ok(CircuitGate {
            name: name.into(),
            wires,
            matrix,
        })
    }

    pub fn named(name: &str, wires: Vec<usize>) -> Result<Self> {
        let m = named_gate(name).ok_or_else(|| Error::Contract(format!("unknown gate {name}")))?;
        Self::new(name, wires, m)
    }

    pub fn adjoint(&self) -> Self {
        CircuitGate {
            name: format!("{}†", self.name),
            wires: self.wires.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// At most two nonzeros in every row.
    pub fn is_two_sparse(&self) -> bool {
        self.matrix
            .row_iter()
            .all(|r| r.iter().filter(|v| v.norm() > 1e-14).count() <= 2)
    }

    /// The gate as a dense operator on `r` qubits.
    pub fn embed(&self, r: usize) -> CMatrix {
        let dim = 1 << r;
        let bit = |w: usize| r - 1 - w;
        let local = |idx: usize| {
            self.wires
                .iter()
                .fold(0, |acc, &w| (acc << 1) | ((idx >> bit(w)) & 1))
        };
        let mut u = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let lc = local(col);
            for lr in 0..self.matrix.nrows() {
                let v = self.matrix[(lr, lc)];
                if v == ZERO {
                    continue;
                }
                let mut row = col;
                for (k, &w) in self.wires.iter().enumerate() {
                    let b = (lr >> (self.wires.len() - 1 - k)) & 1;
                    row = (row & !(1 << bit(w))) | (b << bit(w));
                }
                u[(row, col)] += v;
            }
        }
        u
    }
}

impl GateCircuit {
    pub fn new(qubits: usize, gates: Vec<CircuitGate>, input: Vec<bool>) -> Result<Self> {
        if qubits == 0 || qubits > MAX_WORK_QUBITS {
            return Err(Error::Size(format!(
                "{qubits} work qubits outside 1..={MAX_WORK_QUBITS}"
            )));
        }
        if input.len() > qubits {
            return Err(Error::Contract(format!(
                "{} input bits for {qubits} qubits",
                input.len()
            )));
        }
        if let Some(g) = gates.iter().find(|g| g.wires.iter().any(|&w| w >= qubits)) {
            return Err(Error::Contract(format!(
                "gate {} touches a wire outside {qubits} qubits",
                g.name
            )));
        }
        Ok(GateCircuit {
            qubits,
            gates,
            input,
        })
    }

    /// Work-register index of `|x⟩|0…0⟩`.
    pub fn input_index(&self) -> usize {
        self.input
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | b as usize)
            << (self.qubits - self.input.len())
    }

    /// `C` as a dense matrix, `U_T ⋯ U_1`.
    pub fn unitary(&self) -> CMatrix {
        let dim = 1 << self.qubits;
        self.gates
            .iter()
            .fold(CMatrix::identity(dim, dim), |acc, g| {
                g.embed(self.qubits) * acc
            })
    }

    /// `|α_{x,1}|²`: probability that the output qubit reads `1`.
    pub fn output_probability(&self) -> f64 {
        let dim = 1 << self.qubits;
        let col = self.unitary().column(self.input_index()).into_owned();
        (dim / 2..dim).map(|i| col[i].norm_sqr()).sum()
    }

    /// Random circuit of `t` Haar two-qubit gates on random wire pairs.
    pub fn random(qubits: usize, t: usize, input: Vec<bool>, key: u64) -> Result<Self> {
        if qubits < 2 {
            return Err(Error::Contract(
                "random two-qubit circuits need two wires".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let mut gates = Vec::with_capacity(t);
        for k in 0..t {
            let a = rng.random_range(0..qubits);
            let mut b = rng.random_range(0..qubits - 1);
            if b >= a {
                b += 1;
            }
            gates.push(CircuitGate::new(
                format!("G{k}"),
                vec![a, b],
                haar_unitary(4, &mut rng),
            )?);
        }
        Self::new(qubits, gates, input)
    }

    /// Parses the text format:
    ///
    /// ```text
    /// qubits 3
    /// input 10
    /// H 0
    /// CNOT 0 1
    /// U1 2 <8 numbers: re im of the 2×2 matrix, row-major>
    /// U2 0 2 <32 numbers: re im of the 4×4 matrix, row-major>
    /// ```
    ///
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut qubits = None;
        let mut input = Vec::new();
        let mut gates = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let err = |message: String| Error::Parse { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = body.split_whitespace().collect();
            let wire = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(format!("bad wire index {s:?}")))
            };
            let numbers = |toks: &[&str]| -> Result<Vec<f64>> {
                toks.iter()
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| err(format!("bad number {s:?}")))
                    })
                    .collect()
            };
            match tokens[0] {
                "qubits" if tokens.len() == 2 => qubits = Some(wire(tokens[1])?),
                "input" if tokens.len() == 2 => {
                    input = tokens[1]
                        .chars()
                        .map(|ch| match ch {
                            '0' => Ok(false),
                            '1' => Ok(true),
                            _ => Err(err(format!("input bit {ch:?} is not 0 or 1"))),
                        })
                        .collect::<Result<_>>()?;
                }
                "U1" | "U2" => {
                    let k = if tokens[0] == "U1" { 1 } else { 2 };
                    let dim = 1 << k;
                    if tokens.len() != 1 + k + 2 * dim * dim {
                        return Err(err(format!(
                            "{} expects {k} wires and {} numbers",
                            tokens[0],
                            2 * dim * dim
                        )));
                    }
                    let wires = tokens[1..=k]
                        .iter()
                        .map(|s| wire(s))
                        .collect::<Result<Vec<_>>>()?;
                    let v = numbers(&tokens[1 + k..])?;
                    let m = CMatrix::from_fn(dim, dim, |i, j| {
                        C64::new(v[2 * (i * dim + j)], v[2 * (i * dim + j) + 1])
                    });
                    gates.push(
                        CircuitGate::new(tokens[0], wires, m).map_err(|e| err(e.to_string()))?,
                    );
                }
                name => {
                    let wires = tokens[1..]
                        .iter()
                        .map(|s| wire(s))
                        .collect::<Result<Vec<_>>>()?;
                    gates.push(CircuitGate::named(name, wires).map_err(|e| err(e.to_string()))?);
                }
            }
        }
        let qubits = qubits.ok_or(Error::Parse {
            line: 0,
            message: "missing `qubits` line".into(),
        })?;
        Self::new(qubits, gates, input)
    }
}

/// Haar-random unitary by QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal removed.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = a.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q.column_mut(k).iter_mut().for_each(|x| *x *= phase);
    }
    q
}

/// `(U_1, …, U_T, Z ⊗ I, U_T†, …, U_1†)` in application order, whose
/// product is `C† (Z ⊗ I) C`.
pub fn extend_circuit(circuit: &GateCircuit) -> Result<Vec<CircuitGate>> {
    if circuit.gates.is_empty() {
        return Err(Error::Contract(
            "the circuit needs at least one gate".into(),
        ));
    }
    let mut v = circuit.gates.clone();
    v.push(CircuitGate::named("Z", vec![0])?);
    v.extend(circuit.gates.iter().rev().map(CircuitGate::adjoint));
    Ok(v)
}

#[derive(Clone, Debug)]
pub struct ClockConstruction {
    pub steps: usize,
    /// `M = 2T + 1`.
    pub clock_states: usize,
    /// `⌊log₂ M⌋ + 1`.
    pub clock_qubits: usize,
    pub work_qubits: usize,
    pub w: CMatrix,
    pub h: CMatrix,
    /// Largest number of nonzeros in a row of `h`.
    pub row_sparsity: usize,
    /// Whether every gate is 2-sparse, the premise of the 4-sparsity claim.
    pub gates_two_sparse: bool,
    pub omega: f64,
    pub delta_gap: f64,
    pub c: f64,
    pub eta: f64,
    pub g: f64,
    pub epsilon: f64,
}

/// `W = Σ_l |l+1 mod M⟩⟨l| ⊗ V_l` and `h = (W + W†)/2` with the decision
/// parameters `ω = −cos(πT/M)` (even `T`) or `+cos(πT/M)` (odd `T`),
/// `Δ = π/(2M)`, `c = 1/√(4M)`, `η = cΔ`, `g = 1`, `ε = 1/(6M)`.
pub fn clock_construction(circuit: &GateCircuit) -> Result<ClockConstruction> {
    let v = extend_circuit(circuit)?;
    let t = circuit.gates.len();
    let m = v.len();
    let r = circuit.qubits;
    let wd = 1 << r;
    let dim = m * wd;
    let mut w = CMatrix::zeros(dim, dim);
    for (l, gate) in v.iter().enumerate() {
        let next = (l + 1) % m;
        w.view_mut((next * wd, l * wd), (wd, wd))
            .copy_from(&gate.embed(r));
    }
    let h = (&w + w.adjoint()) * C64::new(0.5, 0.0);
    let row_sparsity = h
        .row_iter()
        .map(|row| row.iter().filter(|x| x.norm() > 1e-14).count())
        .max()
        .unwrap_or(0);
    let mf = m as f64;
    let cos = (PI * t as f64 / mf).cos();
    let omega = if t % 2 == 0 { -cos } else { cos };
    let delta_gap = PI / (2.0 * mf);
    let c = 1.0 / (4.0 * mf).sqrt();
    Ok(ClockConstruction {
        steps: t,
        clock_states: m,
        clock_qubits: (m.ilog2() + 1) as usize,
        work_qubits: r,
        w,
        h,
        row_sparsity,
        gates_two_sparse: circuit.gates.iter().all(CircuitGate::is_two_sparse),
        omega,
        delta_gap,
        c,
        eta: c * delta_gap,
        g: 1.0,
        epsilon: 1.0 / (6.0 * mf),
    })
}

impl ClockConstruction {
    /// `±cos(2πl/M)` with the multiplicities of `h`, ascending.
    pub fn expected_spectrum(&self) -> Vec<f64> {
        let m = self.clock_states;
        let half = 1usize << (self.work_qubits - 1);
        let mut out = Vec::with_capacity(m * 2 * half);
        for l in 0..m {
            let plus = (2.0 * PI * l as f64 / m as f64).cos();
            let minus = (PI * (2 * l + 1) as f64 / m as f64).cos();
            for _ in 0..half {
                out.push(plus);
                out.push(minus);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// `S′(ω, η, h)_{jj} = −η Im[(ω + iη − h)^{-1}]_{jj}` by a linear solve.
    pub fn broadened_ldos(&self, omega: f64, eta: f64, j: usize) -> Result<f64> {
        let dim = self.h.nrows();
        if j >= dim {
            return Err(Error::Contract(format!(
                "index {j} outside dimension {dim}"
            )));
        }
        let a = CMatrix::identity(dim, dim) * C64::new(omega, eta) - &self.h;
        let mut e = CVector::zeros(dim);
        e[j] = ONE;
        let x = a
            .lu()
            .solve(&e)
            .ok_or_else(|| Error::Contract("singular resolvent".into()))?;
        Ok(-eta * x[j].im)
    }

    /// `(S⁺, S⁻)` for `f = S′(ω, η, ·)`.
    pub fn spectral_sums(&self) -> (f64, f64) {
        let m = self.clock_states;
        let f = |x: f64| self.eta * self.eta / ((self.omega - x).powi(2) + self.eta * self.eta);
        let sum = |sign: f64| {
            f(sign)
                + 2.0
                    * (1..=(m - 1) / 2)
                        .map(|l| f(sign * (2.0 * PI * l as f64 / m as f64).cos()))
                        .sum::<f64>()
        };
        (sum(1.0), sum(-1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    No,
    PromiseViolated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    /// Index of `|s_x⟩` in the clock ⊗ work basis.
    pub index: usize,
    pub value: f64,
    /// `|value − g/M|`.
    pub margin: f64,
    pub yes_threshold: f64,
    pub no_threshold: f64,
    /// `|α_{x,1}|²` from direct simulation.
    pub output_probability: f64,
    pub s_plus: f64,
    pub s_minus: f64,
}

/// Evaluates `S′(ω, cΔ, h)_{jj}` at `|s_x⟩` and compares it with
/// `g/M ± ε`: YES above, NO below, a promise violation in between.
pub fn ldos_decision(construction: &ClockConstruction, circuit: &GateCircuit) -> Result<Decision> {
    let j = circuit.input_index();
    let value = construction.broadened_ldos(construction.omega, construction.eta, j)?;
    let mid = construction.g / construction.clock_states as f64;
    let (yes, no) = (mid + construction.epsilon, mid - construction.epsilon);
    let verdict = if value >= yes {
        Verdict::Yes
    } else if value <= no {
        Verdict::No
    } else {
        Verdict::PromiseViolated
    };
    let (s_plus, s_minus) = construction.spectral_sums();
    Ok(Decision {
        verdict,
        index: j,
        value,
        margin: (value - mid).abs(),
        yes_threshold: yes,
        no_threshold: no,
        output_probability: circuit.output_probability(),
        s_plus,
        s_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_respects_wire_order() {
        let cnot = CircuitGate::named("CNOT", vec![1, 0]).unwrap().embed(2);
        // Control on wire 1 (low bit), target wire 0 (high bit): |01⟩ ↦ |11⟩.
        assert_eq!(cnot[(3, 1)], ONE);
        assert_eq!(cnot[(0, 0)], ONE);
    }

    #[test]
    fn parse_round_trip() {
        let c = GateCircuit::parse("qubits 2\ninput 1\n# comment\nX 0\nCNOT 0 1\n").unwrap();
        assert_eq!(c.gates.len(), 2);
        assert_eq!(c.input_index(), 2);
        assert!(c.output_probability() < 1e-15);
        match GateCircuit::parse("qubits 2\nFOO 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn three_state_clock_spectrum() {
        let c =
            GateCircuit::new(1, vec![CircuitGate::named("I", vec![0]).unwrap()], vec![]).unwrap();
        let k = clock_construction(&c).unwrap();
        assert_eq!(k.clock_states, 3);
        let mut ev: Vec<f64> =
            k.h.clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(k.expected_spectrum()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
