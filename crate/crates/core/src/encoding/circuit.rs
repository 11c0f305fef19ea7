//! Sparse-state simulator for reversible-arithmetic circuits.
//!
//! Basis states are `u64` indices with qubit `q` at bit `q`. A state is a
//! sorted list of `(index, amplitude)` pairs, so circuits whose gates are
//! mostly permutations stay cheap even on dozens of qubits.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{unitarity_defect, CMatrix, SparseMatrix, C64, ONE, ZERO};

/// One gate. Multi-qubit operands are listed least-significant first.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// `|x⟩|y⟩ → |x⟩|y ⊕ table[x]⟩`.
    Xor {
        inputs: Vec<usize>,
        targets: Vec<usize>,
        table: Vec<u64>,
    },
    /// For control value `c`, targets `|y⟩ → |tables[c][y]⟩`.
    Permutation {
        controls: Vec<usize>,
        targets: Vec<usize>,
        tables: Vec<Vec<u64>>,
    },
    /// Uniformly controlled 2×2 unitary `[u00, u01, u10, u11]` on `target`.
    Rotation {
        controls: Vec<usize>,
        target: usize,
        matrices: Vec<[C64; 4]>,
    },
    /// Diagonal phase indexed by the value of `qubits`.
    Phase {
        qubits: Vec<usize>,
        phases: Vec<C64>,
    },
    /// Small dense unitary on `qubits`.
    Dense { qubits: Vec<usize>, matrix: CMatrix },
}

fn local_value(index: u64, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().fold(0usize, |acc, (k, &q)| {
        acc | ((((index >> q) & 1) as usize) << k)
    })
}

fn write_local(index: u64, qubits: &[usize], value: u64) -> u64 {
    qubits.iter().enumerate().fold(index, |acc, (k, &q)| {
        let bit = (value >> k) & 1;
        (acc & !(1u64 << q)) | (bit << q)
    })
}

impl Gate {
    pub fn x(qubit: usize) -> Gate {
        Gate::Permutation {
            controls: vec![],
            targets: vec![qubit],
            tables: vec![vec![1, 0]],
        }
    }

    pub fn swap(a: usize, b: usize) -> Gate {
        Gate::Permutation {
            controls: vec![],
            targets: vec![a, b],
            tables: vec![vec![0, 2, 1, 3]],
        }
    }

    pub fn single(qubit: usize, u: [C64; 4]) -> Gate {
        Gate::Rotation {
            controls: vec![],
            target: qubit,
            matrices: vec![u],
        }
    }

    /// Every qubit the gate touches.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Xor {
                inputs, targets, ..
            } => inputs.iter().chain(targets).copied().collect(),
            Gate::Permutation {
                controls, targets, ..
            } => controls.iter().chain(targets).copied().collect(),
            Gate::Rotation {
                controls, target, ..
            } => controls.iter().copied().chain([*target]).collect(),
            Gate::Phase { qubits, .. } | Gate::Dense { qubits, .. } => qubits.clone(),
        }
    }

    /// The same gate with every qubit `q` renamed to `map(q)`.
    pub fn remap(&self, map: impl Fn(usize) -> usize) -> Gate {
        let m = |qs: &[usize]| qs.iter().map(|&q| map(q)).collect::<Vec<_>>();
        match self {
            Gate::Xor {
                inputs,
                targets,
                table,
            } => Gate::Xor {
                inputs: m(inputs),
                targets: m(targets),
                table: table.clone(),
            },
            Gate::Permutation {
                controls,
                targets,
                tables,
            } => Gate::Permutation {
                controls: m(controls),
                targets: m(targets),
                tables: tables.clone(),
            },
            Gate::Rotation {
                controls,
                target,
                matrices,
            } => Gate::Rotation {
                controls: m(controls),
                target: map(*target),
                matrices: matrices.clone(),
            },
            Gate::Phase { qubits, phases } => Gate::Phase {
                qubits: m(qubits),
                phases: phases.clone(),
            },
            Gate::Dense { qubits, matrix } => Gate::Dense {
                qubits: m(qubits),
                matrix: matrix.clone(),
            },
        }
    }

    pub fn adjoint(&self) -> Gate {
        match self {
            Gate::Xor { .. } => self.clone(),
            Gate::Permutation {
                controls,
                targets,
                tables,
            } => {
                let inverse = tables
                    .iter()
                    .map(|t| {
                        let mut inv = vec![0u64; t.len()];
                        for (x, &y) in t.iter().enumerate() {
                            inv[y as usize] = x as u64;
                        }
                        inv
                    })
                    .collect();
                Gate::Permutation {
                    controls: controls.clone(),
                    targets: targets.clone(),
                    tables: inverse,
                }
            }
            Gate::Rotation {
                controls,
                target,
                matrices,
            } => Gate::Rotation {
                controls: controls.clone(),
                target: *target,
                matrices: matrices
                    .iter()
                    .map(|u| [u[0].conj(), u[2].conj(), u[1].conj(), u[3].conj()])
                    .collect(),
            },
            Gate::Phase { qubits, phases } => Gate::Phase {
                qubits: qubits.clone(),
                phases: phases.iter().map(|p| p.conj()).collect(),
            },
            Gate::Dense { qubits, matrix } => Gate::Dense {
                qubits: qubits.clone(),
                matrix: matrix.adjoint(),
            },
        }
    }

    /// Checks table shapes and returns `‖G†G − I‖`; permutation gates that
    /// are not bijections are rejected.
    pub fn unitarity_defect(&self) -> Result<f64> {
        match self {
            Gate::Xor {
                inputs,
                targets,
                table,
            } => {
                if table.len() != 1 << inputs.len()
                    || table.iter().any(|&v| v >> targets.len() != 0)
                {
                    return Err(Error::Contract(
                        "xor table does not fit its registers".into(),
                    ));
                }
                Ok(0.0)
            }
            Gate::Permutation {
                controls,
                targets,
                tables,
            } => {
                if tables.len() != 1 << controls.len() {
                    return Err(Error::Contract(
                        "permutation needs one table per control value".into(),
                    ));
                }
                let size = 1usize << targets.len();
                for t in tables {
                    let mut seen = vec![false; size];
                    if t.len() != size {
                        return Err(Error::Contract(
                            "permutation table has the wrong length".into(),
                        ));
                    }
                    for &y in t {
                        if y as usize >= size || std::mem::replace(&mut seen[y as usize], true) {
                            return Err(Error::Contract(
                                "permutation table is not a bijection".into(),
                            ));
                        }
                    }
                }
                Ok(0.0)
            }
            Gate::Rotation {
                controls, matrices, ..
            } => {
                if matrices.len() != 1 << controls.len() {
                    return Err(Error::Contract(
                        "rotation needs one matrix per control value".into(),
                    ));
                }
                Ok(matrices
                    .iter()
                    .map(|u| unitarity_defect(&CMatrix::from_row_slice(2, 2, u)))
                    .fold(0.0, f64::max))
            }
            Gate::Phase { qubits, phases } => {
                if phases.len() != 1 << qubits.len() {
                    return Err(Error::Contract("phase table has the wrong length".into()));
                }
                Ok(phases
                    .iter()
                    .map(|p| (p.norm_sqr() - 1.0).abs())
                    .fold(0.0, f64::max))
            }
            Gate::Dense { qubits, matrix } => {
                if matrix.nrows() != 1 << qubits.len() || !matrix.is_square() {
                    return Err(Error::Contract(
                        "dense gate does not match its qubits".into(),
                    ));
                }
                Ok(unitarity_defect(matrix))
            }
        }
    }

    fn apply(&self, state: &[(u64, C64)]) -> Vec<(u64, C64)> {
        match self {
            Gate::Xor {
                inputs,
                targets,
                table,
            } => {
                let mut out: Vec<(u64, C64)> = state
                    .iter()
                    .map(|&(idx, amp)| {
                        let x = local_value(idx, inputs);
                        let y = local_value(idx, targets) as u64;
                        (write_local(idx, targets, y ^ table[x]), amp)
                    })
                    .collect();
                out.sort_by_key(|e| e.0);
                out
            }
            Gate::Permutation {
                controls,
                targets,
                tables,
            } => {
                let mut out: Vec<(u64, C64)> = state
                    .iter()
                    .map(|&(idx, amp)| {
                        let c = local_value(idx, controls);
                        let y = local_value(idx, targets);
                        (write_local(idx, targets, tables[c][y]), amp)
                    })
                    .collect();
                out.sort_by_key(|e| e.0);
                out
            }
            Gate::Rotation {
                controls,
                target,
                matrices,
            } => {
                let mut out = Vec::with_capacity(2 * state.len());
                let bit = 1u64 << target;
                for &(idx, amp) in state {
                    let u = &matrices[local_value(idx, controls)];
                    let base = idx & !bit;
                    let (c0, c1) = if idx & bit == 0 {
                        (u[0], u[2])
                    } else {
                        (u[1], u[3])
                    };
                    if c0 != ZERO {
                        out.push((base, c0 * amp));
                    }
                    if c1 != ZERO {
                        out.push((base | bit, c1 * amp));
                    }
                }
                merge(out)
            }
            Gate::Phase { qubits, phases } => state
                .iter()
                .map(|&(idx, amp)| (idx, amp * phases[local_value(idx, qubits)]))
                .collect(),
            Gate::Dense { qubits, matrix } => {
                let dim = matrix.nrows();
                let mut out = Vec::with_capacity(dim * state.len());
                for &(idx, amp) in state {
                    let col = local_value(idx, qubits);
                    for row in 0..dim {
                        let v = matrix[(row, col)];
                        if v != ZERO {
                            out.push((write_local(idx, qubits, row as u64), v * amp));
                        }
                    }
                }
                merge(out)
            }
        }
    }
}

/// Sorts by index (stably) and sums equal indices in their original order.
fn merge(mut entries: Vec<(u64, C64)>) -> Vec<(u64, C64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(u64, C64)> = Vec::with_capacity(entries.len());
    for (idx, amp) in entries {
        match out.last_mut() {
            Some(last) if last.0 == idx => last.1 += amp,
            _ => out.push((idx, amp)),
        }
    }
    out.retain(|e| e.1 != ZERO);
    out
}

/// An ordered list of labelled gates on `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<(String, Gate)>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        assert!(num_qubits <= 63, "basis indices are 63-bit");
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, gate: Gate) {
        debug_assert!(gate.qubits().iter().all(|&q| q < self.num_qubits));
        self.gates.push((label.into(), gate));
    }

    pub fn extend(&mut self, other: &Circuit) {
        assert_eq!(self.num_qubits, other.num_qubits);
        self.gates.extend(other.gates.iter().cloned());
    }

    pub fn adjoint(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self
                .gates
                .iter()
                .rev()
                .map(|(l, g)| (format!("{l}†"), g.adjoint()))
                .collect(),
        }
    }

    pub fn run(&self, state: Vec<(u64, C64)>) -> Vec<(u64, C64)> {
        self.gates.iter().fold(state, |s, (_, g)| g.apply(&s))
    }

    /// Column `input` of the circuit unitary as sorted sparse entries.
    pub fn column(&self, input: u64) -> Vec<(u64, C64)> {
        self.run(vec![(input, ONE)])
    }

    /// Rigorous bound on `‖U†U − I‖` from per-gate defects:
    /// `∏(1 + e_k) − 1`.
    pub fn unitarity_bound(&self) -> Result<f64> {
        let mut prod = 1.0;
        for (label, g) in &self.gates {
            let e = g
                .unitarity_defect()
                .map_err(|err| Error::Contract(format!("gate {label}: {err}")))?;
            prod *= 1.0 + e;
        }
        Ok(prod - 1.0)
    }

    /// Sparse matrix of the full unitary; refused above `cap_qubits`.
    pub fn to_sparse(&self, cap_qubits: usize) -> Result<SparseMatrix> {
        if self.num_qubits > cap_qubits {
            return Err(Error::Size(format!(
                "materializing {} qubits exceeds the cap of {cap_qubits}",
                self.num_qubits
            )));
        }
        let dim = 1usize << self.num_qubits;
        let columns: Vec<Vec<(u64, C64)>> = (0..dim as u64)
            .into_par_iter()
            .map(|j| self.column(j))
            .collect();
        let triples: Vec<(usize, usize, C64)> = columns
            .into_iter()
            .enumerate()
            .flat_map(|(j, col)| col.into_iter().map(move |(i, v)| (i as usize, j, v)))
            .collect();
        Ok(SparseMatrix::from_triples(dim, &triples))
    }

    pub fn to_dense(&self, cap_qubits: usize) -> Result<CMatrix> {
        Ok(self.to_sparse(cap_qubits)?.to_dense())
    }
}

/// `‖U†U − I‖` of a sparse unitary, bounded above by the largest absolute
/// row sum of the Hermitian matrix `U†U − I`.
pub fn sparse_unitarity_defect(u: &SparseMatrix) -> f64 {
    let dim = u.dim();
    // Column j of U is row j of U†.
    let adj = u.adjoint();
    let columns: Vec<Vec<(usize, C64)>> = (0..dim)
        .map(|j| adj.row(j).map(|(i, v)| (i, v.conj())).collect())
        .collect();
    // (U†U)_{jk} = Σ_i conj(U_ij) U_ik, accumulated through the rows of U.
    (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut acc: std::collections::BTreeMap<usize, C64> = std::collections::BTreeMap::new();
            for &(i, uij) in &columns[j] {
                for (k, uik) in u.row(i) {
                    *acc.entry(k).or_insert(ZERO) += uij.conj() * uik;
                }
            }
            let mut row_sum = 0.0;
            let mut diag_seen = false;
            for (k, v) in acc {
                let d = if k == j {
                    diag_seen = true;
                    v - ONE
                } else {
                    v
                };
                row_sum += d.norm();
            }
            if !diag_seen {
                row_sum += 1.0;
            }
            row_sum
        })
        .reduce(|| 0.0, f64::max)
}
