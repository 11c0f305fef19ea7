//! Chebyshev expansions with certified uniform error, Clenshaw evaluation on
//! scalars, dense matrices and matrix-free operators, and an idealized QSVT.
//!
//! Convention: `f(x) ≈ Σ_{k=0}^{d} a_k T_k(x)` with
//! `a_k = (2 − δ_k0)/π ∫ f(x) T_k(x) / √(1 − x²) dx`.

mod qsvt;
mod targets;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{power_norm_estimate, spectral_norm, CMatrix, SparseMatrix, C64, ZERO};
pub use qsvt::qsvt_simulate;
pub use targets::{
    chebyshev_coefficients, fermi_dirac, fermi_dirac_degree, fermi_dirac_expansion,
    greens_degree_bound, greens_expansion, GREENS_WINDOW,
};

/// Expansions below this degree are padded up to it.
pub const DEGREE_FLOOR: usize = 16;
/// Smallest tolerance certifiable in f64 arithmetic.
pub const MIN_TOLERANCE: f64 = 1e-12;

/// What an expansion approximates, in the variable `x = h / α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum Target {
    /// `1 / (e^{β(α x − μ)} + 1)`.
    FermiDirac {
        beta: f64,
        mu: f64,
        alpha: f64,
    },
    /// `η / (ω + iη − α x)`.
    Greens {
        omega: f64,
        eta: f64,
        alpha: f64,
    },
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevExpansion {
    pub coefficients: Vec<C64>,
    pub target: Target,
    /// Bernstein ellipse parameter `ρ > 1`.
    pub rho: f64,
    /// Envelope constant `M` with `|a_k| ≤ 2 M ρ^{-k}`.
    pub bound: f64,
    /// Theorem tail bound `2 M ρ^{-d} / (ρ − 1)`.
    pub tail_bound: f64,
    /// Certified uniform error on `[-1, 1]`.
    pub epsilon_cert: f64,
}

/// `2 M ρ^{-d} / (ρ − 1)`.
pub fn ellipse_bound(rho: f64, m: f64, d: usize) -> Result<f64> {
    if !(rho > 1.0) {
        return Err(Error::Domain(format!(
            "ellipse parameter ρ = {rho} must exceed 1"
        )));
    }
    if !(m > 0.0) {
        return Err(Error::Domain(format!("bound M = {m} must be positive")));
    }
    if rho.is_infinite() {
        return Ok(0.0);
    }
    Ok(2.0 * m * rho.powf(-(d as f64)) / (rho - 1.0))
}

/// `Σ a_k T_k(x)` by backward Clenshaw recurrence.
pub fn clenshaw_scalar(coefficients: &[C64], x: f64) -> C64 {
    let mut b1 = ZERO;
    let mut b2 = ZERO;
    for &a in coefficients.iter().skip(1).rev() {
        let b0 = a + b1 * (2.0 * x) - b2;
        b2 = b1;
        b1 = b0;
    }
    match coefficients.first() {
        Some(&a0) => a0 + b1 * x - b2,
        None => ZERO,
    }
}

/// Clenshaw recurrence with a user-supplied operator `apply(v) = X v`.
pub fn clenshaw_with<F>(coefficients: &[C64], v: &[C64], apply: F) -> Vec<C64>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let n = v.len();
    let mut b1 = vec![ZERO; n];
    let mut b2 = vec![ZERO; n];
    for &a in coefficients.iter().skip(1).rev() {
        let xb = apply(&b1);
        let b0: Vec<C64> = (0..n).map(|i| a * v[i] + xb[i] * 2.0 - b2[i]).collect();
        b2 = std::mem::replace(&mut b1, b0);
    }
    let a0 = coefficients.first().copied().unwrap_or(ZERO);
    let xb = apply(&b1);
    (0..n).map(|i| a0 * v[i] + xb[i] - b2[i]).collect()
}

impl ChebyshevExpansion {
    /// Expansion with given coefficients and no certificate.
    pub fn custom(coefficients: Vec<C64>) -> Self {
        ChebyshevExpansion {
            coefficients,
            target: Target::Custom,
            rho: f64::INFINITY,
            bound: f64::NAN,
            tail_bound: 0.0,
            epsilon_cert: 0.0,
        }
    }

    pub fn from_real(coefficients: &[f64]) -> Self {
        Self::custom(coefficients.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> C64 {
        clenshaw_scalar(&self.coefficients, x)
    }

    pub fn is_real(&self) -> bool {
        self.coefficients.iter().all(|c| c.im == 0.0)
    }

    /// Expansion with conjugated coefficients, `p̄`.
    pub fn conjugate(&self) -> Self {
        ChebyshevExpansion {
            coefficients: self.coefficients.iter().map(|c| c.conj()).collect(),
            ..self.clone()
        }
    }

    /// Truncation to degree `d`.
    pub fn truncated(&self, d: usize) -> Self {
        let mut out = self.clone();
        out.coefficients.truncate(d + 1);
        out
    }

    /// Largest `|p(x)|` on a uniform grid of `points` over `[-1, 1]`.
    pub fn sup_on_grid(&self, points: usize) -> f64 {
        (0..points)
            .map(|k| {
                self.eval(-1.0 + 2.0 * k as f64 / (points - 1) as f64)
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// `p(X)` for a dense matrix with `‖X‖ ≤ 1`.
    pub fn apply_dense(&self, x: &CMatrix) -> Result<CMatrix> {
        let norm = spectral_norm(x);
        if norm > 1.0 + 1e-8 {
            return Err(Error::Scaling(format!("‖h/α‖ = {norm} exceeds one")));
        }
        let n = x.nrows();
        let id = CMatrix::identity(n, n);
        let mut b1 = CMatrix::zeros(n, n);
        let mut b2 = CMatrix::zeros(n, n);
        for &a in self.coefficients.iter().skip(1).rev() {
            let b0 = &id * a + (x * &b1) * C64::new(2.0, 0.0) - &b2;
            b2 = std::mem::replace(&mut b1, b0);
        }
        let a0 = self.coefficients.first().copied().unwrap_or(ZERO);
        Ok(&id * a0 + x * &b1 - b2)
    }

    /// `p(h/α) v` using only sparse products with `h`.
    pub fn apply_sparse(&self, h: &SparseMatrix, alpha: f64, v: &[C64]) -> Result<Vec<C64>> {
        check_scaling(h, alpha)?;
        Ok(clenshaw_with(&self.coefficients, v, |w| {
            let mut y = h.matvec(w);
            y.iter_mut().for_each(|e| *e /= alpha);
            y
        }))
    }

    pub fn to_record(&self) -> ExpansionRecord {
        ExpansionRecord {
            target: self.target.clone(),
            degree: self.degree(),
            rho: self.rho,
            bound: self.bound,
            tail_bound: self.tail_bound,
            epsilon_cert: self.epsilon_cert,
            coefficients: self.coefficients.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("expansion record serializes")
    }
}

/// Verifies `‖h/α‖ ≤ 1 + 1e-8`: the row-sum bound first, then power
/// iteration when that bound is inconclusive.
pub fn check_scaling(h: &SparseMatrix, alpha: f64) -> Result<()> {
    if h.max_row_abs_sum() <= alpha {
        return Ok(());
    }
    let adj = h.adjoint();
    let est = power_norm_estimate(h.dim(), |v| h.matvec(v), |v| adj.matvec(v), 200) / alpha;
    if est > 1.0 + 1e-8 {
        return Err(Error::Scaling(format!(
            "power iteration finds ‖h/α‖ ≈ {est} > 1"
        )));
    }
    Ok(())
}

/// Serialized form of an expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionRecord {
    pub target: Target,
    pub degree: usize,
    pub rho: f64,
    pub bound: f64,
    pub tail_bound: f64,
    pub epsilon_cert: f64,
    /// `[re, im]` pairs.
    pub coefficients: Vec<[f64; 2]>,
}
