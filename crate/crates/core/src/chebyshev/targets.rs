use super::{ellipse_bound, ChebyshevExpansion, Target, DEGREE_FLOOR, MIN_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

/// Largest `|ω/α|` admitted by the Green's expansion.
pub const GREENS_WINDOW: f64 = 0.5;

/// Envelope constant for the Fermi–Dirac function on `E_{1+1/(αβ)}`.
const FERMI_DIRAC_BOUND: f64 = 1.1;

/// `1 / (e^{β(α x − μ)} + 1)`, evaluated without overflow.
pub fn fermi_dirac(beta: f64, mu: f64, alpha: f64, x: f64) -> f64 {
    let z = beta * (alpha * x - mu);
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Coefficients `a_0..a_d` by Gauss–Chebyshev quadrature on `nodes` points.
pub fn chebyshev_coefficients<F: Fn(f64) -> C64>(f: F, d: usize, nodes: usize) -> Vec<C64> {
    let mut a = vec![ZERO; d + 1];
    for j in 0..nodes {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / nodes as f64;
        let fx = f(theta.cos());
        // cos(kθ) by angle-addition recurrence.
        let (s1, c1) = theta.sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        for ak in a.iter_mut() {
            *ak += fx * c;
            let next_c = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = next_c;
        }
    }
    let scale = 2.0 / nodes as f64;
    for (k, ak) in a.iter_mut().enumerate() {
        *ak *= if k == 0 { scale / 2.0 } else { scale };
    }
    a
}

fn check_tolerance(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("tolerance {eps} outside (0, 1)")));
    }
    if eps < MIN_TOLERANCE {
        return Err(Error::Precision(format!(
            "tolerance {eps} is below {MIN_TOLERANCE}"
        )));
    }
    Ok(())
}

/// `⌈(αβ + 1) ln(2 · 1.1 · αβ / ε)⌉`, floored at 16.
pub fn fermi_dirac_degree(alpha_beta: f64, eps: f64) -> usize {
    let arg = 2.0 * FERMI_DIRAC_BOUND * alpha_beta / eps;
    if arg <= 1.0 {
        return DEGREE_FLOOR;
    }
    (((alpha_beta + 1.0) * arg.ln()).ceil() as usize).max(DEGREE_FLOOR)
}

/// `⌈(1 + 1/η) ln(2 / (√(1 − c²) ε))⌉` in rescaled units.
pub fn greens_degree_bound(eta_scaled: f64, c: f64, eps: f64) -> usize {
    ((1.0 + 1.0 / eta_scaled) * (2.0 / ((1.0 - c * c).sqrt() * eps)).ln()).ceil() as usize
}

fn measured_error<F: Fn(f64) -> C64 + Sync>(exp: &ChebyshevExpansion, f: F) -> f64 {
    use rayon::prelude::*;
    let points = 20_000.max(20 * exp.degree());
    (0..points)
        .into_par_iter()
        .map(|k| {
            let x = -1.0 + 2.0 * k as f64 / (points - 1) as f64;
            (exp.eval(x) - f(x)).norm()
        })
        .reduce(|| 0.0, f64::max)
}

fn rounding_allowance(coefficients: &[C64]) -> f64 {
    let l1: f64 = coefficients.iter().map(|c| c.norm()).sum();
    4.0 * f64::EPSILON * coefficients.len() as f64 * l1.max(1.0)
}

/// Expansion of `x ↦ 1/(e^{β(α x − μ)} + 1)`, i.e. `f_β(h − μ)` at
/// `x = h/α`, with the degree of the ellipse argument at `ρ = 1 + 1/(αβ)`.
///
/// The certificate is the larger of the ellipse tail bound and 1.05× the
/// measured maximum error on a grid of `max(20000, 20 d)` points, plus a
/// rounding allowance.
pub fn fermi_dirac_expansion(
    beta: f64,
    mu: f64,
    alpha: f64,
    eps: f64,
) -> Result<ChebyshevExpansion> {
    check_tolerance(eps)?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!(
            "inverse temperature {beta} must be non-negative"
        )));
    }
    if !(alpha > 0.0) || !(mu.abs() < alpha) {
        return Err(Error::Domain(format!(
            "chemical potential {mu} must lie inside (-α, α) with α = {alpha}"
        )));
    }
    let ab = alpha * beta;
    let d = fermi_dirac_degree(ab, eps);
    let f = |x: f64| C64::new(fermi_dirac(beta, mu, alpha, x), 0.0);
    let coefficients = chebyshev_coefficients(f, d, 4 * (d + 1));
    let rho = if ab > 0.0 {
        1.0 + 1.0 / ab
    } else {
        f64::INFINITY
    };
    let tail_bound = ellipse_bound(rho, FERMI_DIRAC_BOUND, d)?;
    let mut exp = ChebyshevExpansion {
        coefficients,
        target: Target::FermiDirac { beta, mu, alpha },
        rho,
        bound: FERMI_DIRAC_BOUND,
        tail_bound,
        epsilon_cert: 0.0,
    };
    let measured = measured_error(&exp, f);
    exp.epsilon_cert = tail_bound.max(1.05 * measured) + rounding_allowance(&exp.coefficients);
    Ok(exp)
}

/// Analytic expansion of the η-scaled retarded kernel `η / (ω + iη − α x)`.
///
/// With `z = (ω + iη)/α` and `q = z + √(z² − 1)`, `|q| > 1`, the
/// coefficients are `a_k = (2 − δ_k0)(η/α) / (√(z² − 1) q^k)`. They satisfy
/// `|a_k| = 2 M ρ^{-k}` with `ρ = |q|` and `M = (η/α)/|√(z² − 1)|`, so the
/// ellipse tail `2 M ρ^{-d}/(ρ − 1)` is the exact sum of discarded
/// coefficient moduli; the degree is the smallest meeting `ε`.
pub fn greens_expansion(omega: f64, eta: f64, alpha: f64, eps: f64) -> Result<ChebyshevExpansion> {
    check_tolerance(eps)?;
    if !(eta > 0.0) {
        return Err(Error::Domain(format!(
            "broadening η = {eta} must be positive"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "sub-normalization α = {alpha} must be positive"
        )));
    }
    let w = omega / alpha;
    if !(w.abs() <= GREENS_WINDOW) {
        return Err(Error::Domain(format!(
            "ω/α = {w} lies outside [-{GREENS_WINDOW}, {GREENS_WINDOW}]; inflate α (doubling it suffices for ω inside the spectrum)"
        )));
    }
    let e = eta / alpha;
    let z = C64::new(w, e);
    let mut root = (z - 1.0).sqrt() * (z + 1.0).sqrt();
    let mut q = z + root;
    if q.norm() <= 1.0 {
        root = -root;
        q = z + root;
    }
    let rho = q.norm();
    let bound = e / root.norm();
    let needed = ((2.0 * bound / (eps * (rho - 1.0))).ln() / rho.ln()).ceil();
    let d = (needed.max(0.0) as usize).max(DEGREE_FLOOR);
    let mut coefficients = Vec::with_capacity(d + 1);
    let inv_q = 1.0 / q;
    let mut term = C64::new(e, 0.0) / root;
    for k in 0..=d {
        coefficients.push(if k == 0 { term } else { term * 2.0 });
        term *= inv_q;
    }
    let tail_bound = ellipse_bound(rho, bound, d)?;
    let epsilon_cert = tail_bound + rounding_allowance(&coefficients);
    Ok(ChebyshevExpansion {
        coefficients,
        target: Target::Greens { omega, eta, alpha },
        rho,
        bound,
        tail_bound,
        epsilon_cert,
    })
}
