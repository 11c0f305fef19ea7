use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::lobatto_grid_weights;
use crate::chebyshev::{check_scaling, fermi_dirac, greens_expansion, MIN_TOLERANCE};
use crate::error::{Error, Result};
use crate::estimation::hutchinson_trace_estimate;
use crate::lattice::HoppingMatrix;
use crate::linalg::{CMatrix, C64, I, ZERO};

/// Largest dimension accepted by the conductivity evaluation.
const MAX_DIM: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TraceMode {
    /// Full trace, the value the entangled-state estimator converges to.
    Exact,
    Hutchinson {
        samples: usize,
        key: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KuboOptions {
    pub beta: f64,
    pub mu: f64,
    pub eta: f64,
    /// Target accuracy of each Green's polynomial.
    pub eps: f64,
    /// Lobatto degree; defaults to a count scaled from the Green's degree.
    pub nodes: Option<usize>,
    pub trace: TraceMode,
}

/// Integrand sample at one Lobatto node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KuboNode {
    pub energy: f64,
    pub weight: f64,
    pub fermi: f64,
    /// `(1/N) Tr[v^x S v^y ∂G/∂ω − h.c.]`.
    pub value: [f64; 2],
    /// Bound on the polynomial error of `value`.
    pub polynomial_bound: f64,
    pub std_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KuboResult {
    /// `σ^{xy}` in units `e = ħ = 1`.
    pub sigma: [f64; 2],
    /// Sum of the three components below.
    pub budget: f64,
    pub polynomial_bound: f64,
    /// `|Q_d − Q_{d/2}|`.
    pub quadrature_estimate: f64,
    /// Three standard errors, propagated through the quadrature.
    pub stochastic_bound: f64,
    pub nodes: usize,
    pub greens_degree: usize,
    pub window: [f64; 2],
    pub cell_volume: f64,
    pub node_values: Vec<KuboNode>,
}

impl KuboResult {
    pub fn sigma(&self) -> C64 {
        C64::new(self.sigma[0], self.sigma[1])
    }
}

fn chebyshev_basis(h: &HoppingMatrix, scale: f64, degree: usize) -> Result<Vec<CMatrix>> {
    check_scaling(&h.matrix, scale)?;
    let n = h.dim();
    let x = h.matrix.scale(1.0 / scale);
    let mut basis = vec![CMatrix::identity(n, n)];
    if degree >= 1 {
        basis.push(x.to_dense());
    }
    for k in 2..=degree {
        let next = x.mul_dense(&basis[k - 1]) * C64::new(2.0, 0.0) - &basis[k - 2];
        basis.push(next);
    }
    Ok(basis)
}

/// `Σ_ij A_ij B_ji`.
fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut s = ZERO;
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// Kubo–Bastin conductivity
/// `σ^{xy} = (i/(V N)) ∫ dE f_β(E − μ) Tr[v^x S(E) v^y ∂G/∂E − h.c.]`
/// with `G(E) = (E + iη − h)^{-1}`, `S = −Im G/π`, `∂G/∂E = −G²`, on a
/// Chebyshev–Lobatto grid over `[−r, r]`, `r` the row-sum bound on `‖h‖`.
///
/// Each `G(E)` is the certified Green's polynomial in `h/(2α)`. The budget
/// adds the propagated polynomial error, the a-posteriori quadrature
/// estimate `|Q_d − Q_{d/2}|` and, for stochastic traces, three standard
/// errors.
pub fn kubo_bastin_conductivity(
    h: &HoppingMatrix,
    vx: &HoppingMatrix,
    vy: &HoppingMatrix,
    cell_volume: f64,
    opts: &KuboOptions,
) -> Result<KuboResult> {
    let n = h.dim();
    if vx.dim() != n || vy.dim() != n {
        return Err(Error::Contract(
            "velocity operators must share the dimension of h".into(),
        ));
    }
    if n > MAX_DIM {
        return Err(Error::Size(format!(
            "{n} sites exceed the conductivity cap {MAX_DIM}"
        )));
    }
    if !(opts.eta > 0.0) || !(opts.beta >= 0.0) {
        return Err(Error::Domain(format!(
            "need η > 0 and β ≥ 0, got η = {}, β = {}",
            opts.eta, opts.beta
        )));
    }
    let eta = opts.eta;
    let alpha_g = 2.0 * h.alpha;
    let r = h.matrix.max_row_abs_sum().min(h.alpha).max(eta);
    let eps_poly = (opts.eps * (1.0 / (r + eta + h.alpha)).min(1.0)).max(MIN_TOLERANCE);
    let d_g = greens_expansion(0.0, eta, alpha_g, eps_poly)?.degree();
    let default_nodes = ((r / eta) * (1.0 / opts.eps).ln()).ceil() as usize;
    let mut d = opts.nodes.unwrap_or(default_nodes.max(d_g));
    if 2 * d < d_g {
        return Err(Error::Domain(format!(
            "{d} quadrature nodes are below half the Green's degree {d_g}; refine the grid to at least {}",
            d_g.div_ceil(2)
        )));
    }
    d = d.max(4).next_multiple_of(2);
    let grid = lobatto_grid_weights(d)?;
    let coarse = lobatto_grid_weights(d / 2)?;
    let energies = grid.mapped_nodes(-r, r);
    let weights = grid.mapped_weights(-r, r);
    let coarse_weights = coarse.mapped_weights(-r, r);

    let expansions: Vec<_> = energies
        .iter()
        .map(|&e| greens_expansion(e, eta, alpha_g, eps_poly))
        .collect::<Result<_>>()?;
    let max_degree = expansions.iter().map(|e| e.degree()).max().unwrap_or(0);
    let basis = chebyshev_basis(h, alpha_g, max_degree)?;
    let vxn = vx.matrix.max_row_abs_sum();
    let vyn = vy.matrix.max_row_abs_sum();
    let g = 1.0 / eta;

    let node_values: Vec<KuboNode> = energies
        .par_iter()
        .zip(&weights)
        .zip(&expansions)
        .map(|((&energy, &weight), exp)| -> Result<KuboNode> {
            let mut gm = CMatrix::zeros(n, n);
            for (a, t) in exp.coefficients.iter().zip(&basis) {
                let c = a / eta;
                for (g, x) in gm.as_mut_slice().iter_mut().zip(t.as_slice()) {
                    *g += c * x;
                }
            }
            let s = (&gm - gm.adjoint()) * (I / (2.0 * PI));
            let dg = -(&gm * &gm);
            let p = vx.matrix.mul_dense(&s);
            let q = vy.matrix.mul_dense(&dg);
            let (value, std_error) = match &opts.trace {
                TraceMode::Exact => {
                    let x = trace_product(&p, &q);
                    let x_hc = trace_product(&q.adjoint(), &p.adjoint());
                    ((x - x_hc) / n as f64, None)
                }
                TraceMode::Hutchinson { samples, key } => {
                    let pq = &p * &q;
                    let m = &pq - pq.adjoint();
                    let est = hutchinson_trace_estimate(
                        |v| {
                            (&m * nalgebra::DVector::from_column_slice(v))
                                .iter()
                                .copied()
                                .collect()
                        },
                        n,
                        *samples,
                        *key,
                    )?;
                    (est.value(), est.std_error)
                }
            };
            let delta = exp.epsilon_cert / eta;
            let polynomial_bound = 2.0
                * vxn
                * vyn
                * ((delta / PI) * (g + delta).powi(2)
                    + (g / PI) * (2.0 * g * delta + delta * delta));
            Ok(KuboNode {
                energy,
                weight,
                fermi: fermi_dirac(opts.beta, opts.mu, 1.0, energy),
                value: [value.re, value.im],
                polynomial_bound,
                std_error,
            })
        })
        .collect::<Result<_>>()?;

    let prefactor = I / cell_volume;
    let integrand = |k: &KuboNode| C64::new(k.value[0], k.value[1]) * k.fermi;
    let fine: C64 = node_values
        .iter()
        .map(|k| integrand(k) * k.weight)
        .sum::<C64>()
        * prefactor;
    let coarse_sum: C64 = coarse_weights
        .iter()
        .enumerate()
        .map(|(j, w)| integrand(&node_values[2 * j]) * *w)
        .sum::<C64>()
        * prefactor;
    let scale = 1.0 / cell_volume;
    let polynomial_bound = scale
        * node_values
            .iter()
            .map(|k| k.weight * k.fermi * k.polynomial_bound)
            .sum::<f64>();
    let stochastic_bound = scale
        * node_values
            .iter()
            .map(|k| 3.0 * k.weight * k.fermi * k.std_error.unwrap_or(0.0))
            .sum::<f64>();
    let quadrature_estimate = (fine - coarse_sum).norm();
    Ok(KuboResult {
        sigma: [fine.re, fine.im],
        budget: polynomial_bound + quadrature_estimate + stochastic_bound,
        polynomial_bound,
        quadrature_estimate,
        stochastic_bound,
        nodes: d,
        greens_degree: d_g,
        window: [-r, r],
        cell_volume,
        node_values,
    })
}
