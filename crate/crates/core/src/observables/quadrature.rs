use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Chebyshev–Lobatto nodes `x_j = cos(jπ/d)` with Clenshaw–Curtis weights
/// `W_j = ∫_{-1}^{1} L_j(x) dx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub degree: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn lobatto_grid_weights(d: usize) -> Result<QuadratureGrid> {
    if d < 2 {
        return Err(Error::Domain(format!(
            "Lobatto grid degree {d} must be at least 2"
        )));
    }
    let nodes: Vec<f64> = (0..=d).map(|j| (PI * j as f64 / d as f64).cos()).collect();
    let half = d / 2;
    let weights = (0..=d)
        .map(|j| {
            let c = if j == 0 || j == d { 1.0 } else { 2.0 };
            let mut s = 1.0;
            for k in 1..=half {
                let b = if 2 * k == d { 1.0 } else { 2.0 };
                s -=
                    b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * PI * (k * j) as f64 / d as f64).cos();
            }
            c * s / d as f64
        })
        .collect();
    Ok(QuadratureGrid {
        degree: d,
        nodes,
        weights,
    })
}

impl QuadratureGrid {
    /// Nodes mapped affinely onto `[a, b]`.
    pub fn mapped_nodes(&self, a: f64, b: f64) -> Vec<f64> {
        let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
        self.nodes.iter().map(|x| c + h * x).collect()
    }

    /// Weights for `[a, b]`.
    pub fn mapped_weights(&self, a: f64, b: f64) -> Vec<f64> {
        let h = (b - a) / 2.0;
        self.weights.iter().map(|w| w * h).collect()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.mapped_nodes(a, b)
            .into_iter()
            .zip(self.mapped_weights(a, b))
            .map(|(x, w)| w * f(x))
            .sum()
    }

    pub fn integrate_complex<F: Fn(f64) -> C64>(&self, a: f64, b: f64, f: F) -> C64 {
        self.mapped_nodes(a, b)
            .into_iter()
            .zip(self.mapped_weights(a, b))
            .map(|(x, w)| f(x) * w)
            .sum()
    }
}

/// Interpolation error `4 M ρ^{-d} / (ρ − 1)` of the degree-`d` Lobatto
/// interpolant of a function bounded by `M` inside the Bernstein ellipse `ρ`.
pub fn lobatto_interpolation_bound(rho: f64, m: f64, d: usize) -> f64 {
    4.0 * m * rho.powf(-(d as f64)) / (rho - 1.0)
}

/// Bound on `|Q_d f − ∫_a^b f|` for `f` analytic inside the ellipse of
/// parameter `rho_max` (in the coordinates of `[a, b]`).
///
/// `M(ρ)` is sampled on the ellipse boundary with a 5% safety factor and the
/// bound is minimized over a ladder of `ρ < rho_max`.
pub fn analytic_integration_bound<F>(f: F, a: f64, b: f64, rho_max: f64, d: usize) -> f64
where
    F: Fn(C64) -> C64,
{
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    let samples = 4096;
    (1..20)
        .map(|t| {
            let rho = 1.0 + (rho_max - 1.0) * t as f64 / 20.0;
            let m = (0..samples)
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / samples as f64;
                    let z = C64::new(
                        (rho + 1.0 / rho) / 2.0 * th.cos(),
                        (rho - 1.0 / rho) / 2.0 * th.sin(),
                    );
                    f(z * h + c).norm()
                })
                .fold(0.0, f64::max)
                * 1.05;
            (b - a) * lobatto_interpolation_bound(rho, m, d)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Bernstein parameter `|z + √(z² − 1)|` of a singularity at `z`, taking the
/// root with modulus above one.
pub fn bernstein_parameter(z: C64) -> f64 {
    let root = (z - 1.0).sqrt() * (z + 1.0).sqrt();
    (z + root).norm().max((z - root).norm())
}

/// Lorentzian `η / ((ω − e)² + η²)` and the analytic quadrature bound on
/// `[a, b]` at degree `d`.
pub fn lorentzian_quadrature_bound(center: f64, eta: f64, a: f64, b: f64, d: usize) -> f64 {
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    let pole = C64::new((center - c) / h, eta / h);
    let f = |w: C64| {
        let x = w - center;
        C64::new(eta, 0.0) / (x * x + eta * eta)
    };
    analytic_integration_bound(f, a, b, bernstein_parameter(pole), d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for d in 2..40 {
            let g = lobatto_grid_weights(d).unwrap();
            assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-12);
            assert!(g.nodes.windows(2).all(|w| w[0] > w[1]));
            assert!(g.weights.iter().all(|&w| w > 0.0));
        }
        assert!(lobatto_grid_weights(1).is_err());
    }

    #[test]
    fn low_moments_exact() {
        for d in 2..12 {
            let g = lobatto_grid_weights(d).unwrap();
            assert!(g.integrate(-1.0, 1.0, |x| x).abs() < 1e-13);
            assert!((g.integrate(-1.0, 1.0, |x| x * x) - 2.0 / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn odd_degree_polynomials_exact_up_to_degree() {
        let g = lobatto_grid_weights(9).unwrap();
        let exact = (3f64.powi(10) - 1.0) / 10.0;
        assert!((g.integrate(1.0, 3.0, |x| x.powi(9)) - exact).abs() < 1e-9 * exact);
    }
}
