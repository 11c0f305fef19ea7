//! Physical observables from Chebyshev expansions of `h`: the one-body
//! reduced density matrix, the η-scaled retarded Green's function, the
//! spectral function and LDOS in real and momentum space, and the
//! Kubo–Bastin conductivity.
//!
//! The chemical potential is folded into the expansions rather than into
//! the encoded matrix: `f_β(h − μ)` shifts the Fermi function and
//! `G^R(ω) = (ω + iη − (h − μ))^{-1}` is evaluated at `ω + μ`.

mod kubo;
mod quadrature;

use std::collections::BTreeMap;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{
    check_scaling, fermi_dirac_expansion, greens_expansion, ChebyshevExpansion, Target,
    MIN_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::lattice::HoppingMatrix;
use crate::linalg::{CMatrix, SparseMatrix, C64, I, ZERO};
pub use kubo::{kubo_bastin_conductivity, KuboNode, KuboOptions, KuboResult, TraceMode};
pub use quadrature::{
    analytic_integration_bound, bernstein_parameter, lobatto_grid_weights,
    lobatto_interpolation_bound, lorentzian_quadrature_bound, QuadratureGrid,
};

/// Largest dimension for which full matrices are formed.
pub const DENSE_CAP: usize = 1 << 12;

/// A value with its certified error budget.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounded<T> {
    pub value: T,
    pub budget: f64,
}

/// `p(h/scale)` as a dense matrix, using only sparse products with `h`.
pub fn polynomial_matrix(
    exp: &ChebyshevExpansion,
    h: &SparseMatrix,
    scale: f64,
) -> Result<CMatrix> {
    let n = h.dim();
    if n > DENSE_CAP {
        return Err(Error::Size(format!(
            "dense {n}×{n} matrix above cap {DENSE_CAP}"
        )));
    }
    check_scaling(h, scale)?;
    let x = h.scale(1.0 / scale);
    let id = CMatrix::identity(n, n);
    let mut b1 = CMatrix::zeros(n, n);
    let mut b2 = CMatrix::zeros(n, n);
    for &a in exp.coefficients.iter().skip(1).rev() {
        let b0 = &id * a + x.mul_dense(&b1) * C64::new(2.0, 0.0) - &b2;
        b2 = std::mem::replace(&mut b1, b0);
    }
    let a0 = exp.coefficients.first().copied().unwrap_or(ZERO);
    Ok(&id * a0 + x.mul_dense(&b1) - b2)
}

fn unit(n: usize, j: usize) -> Result<Vec<C64>> {
    if j >= n {
        return Err(Error::Contract(format!("index {j} outside dimension {n}")));
    }
    let mut v = vec![ZERO; n];
    v[j] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Density matrix `D = f_β(h − μ)` from the certified Fermi–Dirac expansion.
pub fn one_rdm(
    h: &HoppingMatrix,
    beta: f64,
    mu: f64,
    eps: f64,
) -> Result<(CMatrix, ChebyshevExpansion)> {
    let exp = fermi_dirac_expansion(beta, mu, h.alpha, eps)?;
    Ok((one_rdm_with(h, &exp)?, exp))
}

/// `D` from a precomputed Fermi–Dirac expansion, for ensembles sharing `α`.
pub fn one_rdm_with(h: &HoppingMatrix, exp: &ChebyshevExpansion) -> Result<CMatrix> {
    match exp.target {
        Target::FermiDirac { alpha, .. } if alpha == h.alpha => {
            polynomial_matrix(exp, &h.matrix, h.alpha)
        }
        _ => Err(Error::Contract(
            "expansion is not a Fermi–Dirac expansion at this α".into(),
        )),
    }
}

/// Column `j` of `D`, each entry within `ε_cert`.
pub fn one_rdm_column(
    h: &HoppingMatrix,
    beta: f64,
    mu: f64,
    eps: f64,
    j: usize,
) -> Result<Bounded<Vec<C64>>> {
    let exp = fermi_dirac_expansion(beta, mu, h.alpha, eps)?;
    let value = exp.apply_sparse(&h.matrix, h.alpha, &unit(h.dim(), j)?)?;
    Ok(Bounded {
        value,
        budget: exp.epsilon_cert,
    })
}

/// `Σ_ij O_ij D_ji` for a Hermitian local operator `O`.
pub fn local_one_body_expectation(d: &CMatrix, o: &SparseMatrix) -> Result<f64> {
    if o.dim() != d.nrows() {
        return Err(Error::Contract(format!(
            "operator of dimension {} against a {}-site density",
            o.dim(),
            d.nrows()
        )));
    }
    let defect = o.hermitian_defect();
    if defect > 1e-12 {
        return Err(Error::Contract(format!(
            "operator is not Hermitian (defect {defect:e})"
        )));
    }
    let s: C64 = o.triples().into_iter().map(|(i, j, v)| v * d[(j, i)]).sum();
    Ok(s.re)
}

/// An η-scaled Green's function `ηG^R(ω)` and its accounting.
#[derive(Clone, Debug)]
pub struct Greens {
    pub matrix: CMatrix,
    pub expansion: ChebyshevExpansion,
    /// Sub-normalization of the expansion variable, `2α`.
    pub alpha_g: f64,
    /// Bound on `‖(ω + iη − (h − μ)) G − I‖`.
    pub residual_bound: f64,
}

/// Polynomial tolerance making the Green's residual at most `ε/η`.
fn greens_tolerance(omega_eff: f64, eta: f64, alpha: f64, eps: f64) -> f64 {
    (eps * (1.0 / (omega_eff.abs() + eta + alpha)).min(1.0)).max(MIN_TOLERANCE)
}

fn greens_setup(
    h: &HoppingMatrix,
    omega: f64,
    eta: f64,
    mu: f64,
    eps: f64,
) -> Result<(ChebyshevExpansion, f64, f64)> {
    let w = omega + mu;
    let alpha_g = 2.0 * h.alpha;
    if w.abs() > h.alpha {
        return Err(Error::Domain(format!(
            "ω + μ = {w} lies outside [-α, α] with α = {}; inflate α to at least {}",
            h.alpha,
            w.abs()
        )));
    }
    let exp = greens_expansion(w, eta, alpha_g, greens_tolerance(w, eta, h.alpha, eps))?;
    let residual = exp.epsilon_cert * (w.abs() + eta + h.alpha) / eta;
    Ok((exp, alpha_g, residual))
}

/// `ηG^R(ω) = η (ω + iη − (h − μ))^{-1}`; `‖ηG‖ ≤ 1 + ε_cert`.
pub fn retarded_greens(
    h: &HoppingMatrix,
    omega: f64,
    eta: f64,
    mu: f64,
    eps: f64,
) -> Result<Greens> {
    let (expansion, alpha_g, residual_bound) = greens_setup(h, omega, eta, mu, eps)?;
    let matrix = polynomial_matrix(&expansion, &h.matrix, alpha_g)?;
    Ok(Greens {
        matrix,
        expansion,
        alpha_g,
        residual_bound,
    })
}

/// Column `j` of `ηG^R(ω)`, each entry within `ε_cert`.
pub fn retarded_greens_column(
    h: &HoppingMatrix,
    omega: f64,
    eta: f64,
    mu: f64,
    eps: f64,
    j: usize,
) -> Result<Bounded<Vec<C64>>> {
    let (exp, alpha_g, _) = greens_setup(h, omega, eta, mu, eps)?;
    let value = exp.apply_sparse(&h.matrix, alpha_g, &unit(h.dim(), j)?)?;
    Ok(Bounded {
        value,
        budget: exp.epsilon_cert,
    })
}

/// `πηS = i(ηG − (ηG)†)/2`, the Hermitian part of `−Im ηG`.
pub fn pi_eta_spectral(eta_g: &CMatrix) -> CMatrix {
    (eta_g - eta_g.adjoint()) * (I * 0.5)
}

/// `πηS(ω)` with budget `ε_cert` in operator norm.
pub fn spectral_function(
    h: &HoppingMatrix,
    omega: f64,
    eta: f64,
    mu: f64,
    eps: f64,
) -> Result<Bounded<CMatrix>> {
    let g = retarded_greens(h, omega, eta, mu, eps)?;
    Ok(Bounded {
        value: pi_eta_spectral(&g.matrix),
        budget: g.expansion.epsilon_cert,
    })
}

/// η-scaled site LDOS `πη S(ω)_ii = −Im ηG_ii`.
pub fn ldos_site(
    h: &HoppingMatrix,
    omega: f64,
    eta: f64,
    mu: f64,
    eps: f64,
    i: usize,
) -> Result<Bounded<f64>> {
    let col = retarded_greens_column(h, omega, eta, mu, eps, i)?;
    Ok(Bounded {
        value: -col.value[i].im,
        budget: col.budget,
    })
}

/// Unitary multi-axis DFT of a row-major array with the given extents.
pub fn fourier_transform(v: &mut [C64], extents: &[usize]) {
    let n: usize = extents.iter().product();
    assert_eq!(v.len(), n, "array length must match the extents");
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = n;
    for &len in extents {
        stride /= len;
        let fft = planner.plan_fft_forward(len);
        let mut line = vec![ZERO; len];
        for block in 0..n / (len * stride) {
            for offset in 0..stride {
                let base = block * len * stride + offset;
                for (k, x) in line.iter_mut().enumerate() {
                    *x = v[base + k * stride];
                }
                fft.process(&mut line);
                for (k, x) in line.iter().enumerate() {
                    v[base + k * stride] = *x;
                }
            }
        }
    }
    let s = 1.0 / (n as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= s);
}

/// `F A F†` for the unitary multi-axis DFT `F`.
pub fn fourier_conjugate(a: &CMatrix, extents: &[usize]) -> CMatrix {
    let transform_columns = |m: &CMatrix| {
        let mut out = m.clone();
        for mut col in out.column_iter_mut() {
            let mut v: Vec<C64> = col.iter().copied().collect();
            fourier_transform(&mut v, extents);
            col.iter_mut().zip(v).for_each(|(c, x)| *c = x);
        }
        out
    };
    // F (F A)† = F A† F†, whose adjoint is F A F†.
    transform_columns(&transform_columns(a).adjoint()).adjoint()
}

/// Momentum LDOS `[F πηS F†]_kk` for every `k`, row-major over `extents`.
pub fn ldos_momentum(
    h: &HoppingMatrix,
    extents: &[usize],
    omega: f64,
    eta: f64,
    mu: f64,
    eps: f64,
) -> Result<Bounded<Vec<f64>>> {
    if extents.iter().product::<usize>() != h.dim() {
        return Err(Error::Contract(format!(
            "extents {extents:?} do not match dimension {}",
            h.dim()
        )));
    }
    let s = spectral_function(h, omega, eta, mu, eps)?;
    let sk = fourier_conjugate(&s.value, extents);
    Ok(Bounded {
        value: sk.diagonal().iter().map(|x| x.re).collect(),
        budget: s.budget,
    })
}

/// Site LDOS over an ω grid, one row per `(ω, site)`; nodes run in parallel.
pub fn ldos_sweep(
    h: &HoppingMatrix,
    omegas: &[f64],
    sites: &[usize],
    eta: f64,
    mu: f64,
    eps: f64,
) -> Result<Vec<(f64, usize, Bounded<f64>)>> {
    let rows: Result<Vec<Vec<_>>> = omegas
        .par_iter()
        .map(|&w| {
            sites
                .iter()
                .map(|&i| Ok((w, i, ldos_site(h, w, eta, mu, eps, i)?)))
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    RdmElement,
    Ldos,
    MomentumLdos,
    Trace,
    Conductivity,
}

/// Serialized observable with parameters, values and error accounting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableRecord {
    pub kind: ObservableKind,
    pub parameters: BTreeMap<String, f64>,
    /// `[re, im]` pairs.
    pub values: Vec<[f64; 2]>,
    pub epsilon_cert: f64,
    pub estimation_epsilon: f64,
    pub model_hash: Option<String>,
    pub key: Option<u64>,
}

impl ObservableRecord {
    pub fn total_budget(&self) -> f64 {
        self.epsilon_cert + self.estimation_epsilon
    }
}
