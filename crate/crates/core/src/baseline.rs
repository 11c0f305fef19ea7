//! Classical reference points: dense exact diagonalization and the kernel
//! polynomial method restricted to the light cone of a local Hamiltonian.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chebyshev::ChebyshevExpansion;
use crate::error::{Error, Result};
use crate::lattice::{assemble_hopping_matrix, Boundary, DisorderSpec, LatticeSpec};
use crate::linalg::{CMatrix, SparseMatrix, C64, ZERO};

/// Default dimension cap for dense eigensolves.
pub const DEFAULT_DENSE_CAP: usize = 1 << 12;

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, in the order of `eigenvalues`.
    pub vectors: CMatrix,
    /// `‖h V − V diag(λ)‖_max`.
    pub residual: f64,
}

pub fn exact_diagonalize(h: &CMatrix, cap: usize) -> Result<EigenDecomposition> {
    let n = h.nrows();
    if n > cap {
        return Err(Error::Size(format!("{n}×{n} eigensolve above cap {cap}")));
    }
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    let mut scaled = vectors.clone();
    for (k, &l) in eigenvalues.iter().enumerate() {
        scaled.column_mut(k).iter_mut().for_each(|x| *x *= l);
    }
    let residual = (h * &vectors - scaled)
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    Ok(EigenDecomposition {
        eigenvalues,
        vectors,
        residual,
    })
}

impl EigenDecomposition {
    /// `V f(λ) V†`.
    pub fn apply<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let fk = f(l);
            scaled.column_mut(k).iter_mut().for_each(|x| *x *= fk);
        }
        scaled * self.vectors.adjoint()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeMode {
    /// Update only sites reached so far.
    ActiveSet,
    /// Update every site; used to check that the cone loses nothing.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KpmElement {
    pub value: C64,
    /// Sites within graph distance `d` of `j`.
    pub touched: usize,
}

/// `[p(h/scale)]_{ij}` by the Chebyshev vector recurrence seeded at `|j⟩`,
/// with no damping kernel.
pub fn kpm_lightcone_element(
    h: &SparseMatrix,
    exp: &ChebyshevExpansion,
    scale: f64,
    i: usize,
    j: usize,
    mode: ConeMode,
) -> Result<KpmElement> {
    let n = h.dim();
    if i >= n || j >= n {
        return Err(Error::Contract(format!(
            "element ({i}, {j}) outside dimension {n}"
        )));
    }
    let x = h.scale(1.0 / scale);
    let mut in_cone = vec![false; n];
    in_cone[j] = true;
    let mut active = vec![j];
    let mut prev = vec![ZERO; n];
    let mut cur = vec![ZERO; n];
    cur[j] = C64::new(1.0, 0.0);
    let coeffs = &exp.coefficients;
    let mut value = coeffs.first().copied().unwrap_or(ZERO) * cur[i];
    for (k, &a) in coeffs.iter().enumerate().skip(1) {
        if mode == ConeMode::ActiveSet {
            let frontier: Vec<usize> = active
                .iter()
                .flat_map(|&s| x.row(s).map(|(c, _)| c))
                .collect();
            for c in frontier {
                if !in_cone[c] {
                    in_cone[c] = true;
                    active.push(c);
                }
            }
        }
        let rows: Box<dyn Iterator<Item = usize>> = match mode {
            ConeMode::ActiveSet => Box::new(active.iter().copied()),
            ConeMode::Full => Box::new(0..n),
        };
        let factor = if k == 1 { 1.0 } else { 2.0 };
        let mut next = vec![ZERO; n];
        for r in rows {
            let mut acc = ZERO;
            for (c, v) in x.row(r) {
                acc += v * cur[c];
            }
            next[r] = acc * factor - if k == 1 { ZERO } else { prev[r] };
        }
        prev = std::mem::replace(&mut cur, next);
        value += a * cur[i];
    }
    let touched = match mode {
        ConeMode::ActiveSet => active.len(),
        ConeMode::Full => graph_ball(h, j, exp.degree()),
    };
    Ok(KpmElement { value, touched })
}

/// Number of sites within graph distance `d` of `j`.
pub fn graph_ball(h: &SparseMatrix, j: usize, d: usize) -> usize {
    let mut seen = vec![false; h.dim()];
    seen[j] = true;
    let mut frontier = vec![j];
    let mut count = 1;
    for _ in 0..d {
        let mut next = Vec::new();
        for &s in &frontier {
            for (c, _) in h.row(s) {
                if !seen[c] {
                    seen[c] = true;
                    next.push(c);
                }
            }
        }
        count += next.len();
        frontier = next;
    }
    count
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightconeRow {
    pub degree: usize,
    pub touched: usize,
    /// Median over repetitions, warm-up discarded.
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightconeTable {
    pub dimension: usize,
    pub extent: usize,
    pub rows: Vec<LightconeRow>,
    /// Least-squares slope of `ln touched` against `ln d`.
    pub exponent: f64,
    pub warnings: Vec<String>,
}

/// `(slope, intercept)` of the least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Touched sites and wall time of light-cone KPM on a clean periodic
/// nearest-neighbour lattice of side `extent` in `dimension` dimensions.
///
/// Degrees whose cone would wrap (`2d + 1 > extent`) are dropped with a
/// warning. Each timing is the median of `reps` runs after one warm-up.
pub fn benchmark_lightcone_scaling(
    dimension: usize,
    extent: usize,
    degrees: &[usize],
    reps: usize,
) -> Result<LightconeTable> {
    if reps < 5 {
        return Err(Error::Config(format!(
            "{reps} repetitions; at least 5 are required"
        )));
    }
    let lattice = LatticeSpec::new(&vec![extent; dimension], Boundary::Periodic);
    let h = assemble_hopping_matrix(&lattice, &DisorderSpec::clean(1.0, 0.0))?;
    let centre = lattice.index(&vec![extent / 2; dimension]);
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for &d in degrees {
        if 2 * d + 1 > extent {
            warnings.push(format!(
                "degree {d} wraps a lattice of side {extent}; dropped"
            ));
            continue;
        }
        let exp = ChebyshevExpansion::from_real(&vec![1.0; d + 1]);
        let run = || {
            kpm_lightcone_element(
                &h.matrix,
                &exp,
                h.alpha,
                centre,
                centre,
                ConeMode::ActiveSet,
            )
        };
        let touched = run()?.touched;
        let mut times = Vec::with_capacity(reps);
        for _ in 0..reps {
            let start = Instant::now();
            std::hint::black_box(run()?);
            times.push(start.elapsed().as_secs_f64());
        }
        times.sort_by(f64::total_cmp);
        rows.push(LightconeRow {
            degree: d,
            touched,
            seconds: times[reps / 2],
        });
    }
    if rows.len() < 2 {
        return Err(Error::Config(
            "fewer than two usable degrees for the scaling fit".into(),
        ));
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.degree as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| (r.touched as f64).ln()).collect();
    let exponent = linear_fit(&lx, &ly).0;
    Ok(LightconeTable {
        dimension,
        extent,
        rows,
        exponent,
        warnings,
    })
}

impl LightconeTable {
    /// CSV with `#`-prefixed metadata lines.
    pub fn to_csv(&self, metadata: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&format!(
            "# dimension: {}\n# extent: {}\n# exponent: {:.6}\n",
            self.dimension, self.extent, self.exponent
        ));
        for w in &self.warnings {
            out.push_str(&format!("# warning: {w}\n"));
        }
        out.push_str("degree,touched,seconds\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:e}\n", r.degree, r.touched, r.seconds));
        }
        out
    }
}
