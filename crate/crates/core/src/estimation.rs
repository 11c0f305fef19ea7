//! Reading numbers out of block-encodings: exact amplitudes, a simulated
//! amplitude estimator with a bounded-noise contract, the entangled-state
//! trace and the Hutchinson stochastic trace.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::BlockEncoding;
use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

/// Constant `C` in the query model `⌈C (1/ε) ln(1/δ)⌉`.
pub const QAE_CONSTANT: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRecord {
    /// `[re, im]`.
    pub value: [f64; 2],
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub queries: Option<u64>,
    pub samples: Option<usize>,
    /// Present only for stochastic estimators.
    pub std_error: Option<f64>,
    pub key: u64,
}

impl EstimateRecord {
    pub fn value(&self) -> C64 {
        C64::new(self.value[0], self.value[1])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate record serializes")
    }
}

/// `⌈C (1/ε) ln(1/δ)⌉`.
pub fn qae_queries(eps: f64, delta: f64) -> u64 {
    (QAE_CONSTANT * (1.0 / delta).ln() / eps).ceil() as u64
}

/// `α ⟨0, i| U |0, j⟩`.
pub fn matrix_element(be: &BlockEncoding, i: usize, j: usize) -> Result<C64> {
    let n = be.block_dim();
    if i >= n || j >= n {
        return Err(Error::Contract(format!(
            "element ({i}, {j}) outside a {n}-dimensional block"
        )));
    }
    Ok(be
        .column(j as u64)
        .into_iter()
        .find(|e| e.0 == i as u64)
        .map_or(ZERO, |e| e.1)
        * be.alpha)
}

/// Simulated amplitude estimation of `amplitude` to additive error `ε`.
///
/// With probability `1 − δ` the noise is a Gaussian of scale `ε/3`
/// resampled until it lands inside the `ε` disc; otherwise it is the
/// untruncated Gaussian. Complex amplitudes get independent noise on both
/// components with scale `ε/(3√2)`.
pub fn amplitude_estimate(
    amplitude: C64,
    eps: f64,
    delta: f64,
    key: u64,
) -> Result<EstimateRecord> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "(ε, δ) = ({eps}, {delta}) must lie in (0, 1)²"
        )));
    }
    if amplitude.norm() > 1.0 + 1e-12 {
        return Err(Error::Contract(format!(
            "amplitude modulus {} exceeds one",
            amplitude.norm()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let complex = amplitude.im != 0.0;
    let sigma = if complex {
        eps / (3.0 * 2f64.sqrt())
    } else {
        eps / 3.0
    };
    let normal = Normal::new(0.0, sigma).expect("positive scale");
    let draw = |rng: &mut ChaCha8Rng| {
        let re = normal.sample(rng);
        let im = if complex { normal.sample(rng) } else { 0.0 };
        C64::new(re, im)
    };
    let bounded = rng.random::<f64>() >= delta;
    let mut noise = draw(&mut rng);
    while bounded && noise.norm() > eps {
        noise = draw(&mut rng);
    }
    let v = amplitude + noise;
    Ok(EstimateRecord {
        value: [v.re, v.im],
        epsilon: eps,
        delta: Some(delta),
        queries: Some(qae_queries(eps, delta)),
        samples: None,
        std_error: None,
        key,
    })
}

/// `α ⟨0, Φ| (U ⊗ I) |0, Φ⟩` with `|Φ⟩ = N^{-1/2} Σ_j |j⟩|j⟩`, which equals
/// `Tr(block)/N`.
pub fn entangled_trace(be: &BlockEncoding) -> C64 {
    let n = be.block_dim();
    let diag: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|j| {
            be.column(j as u64)
                .into_iter()
                .find(|e| e.0 == j as u64)
                .map_or(ZERO, |e| e.1)
        })
        .collect();
    diag.into_iter().sum::<C64>() * (be.alpha / n as f64)
}

/// Rademacher probe `k` of a stream keyed by `key`, normalized to unit norm.
pub fn rademacher_probe(n: usize, key: u64, k: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(k);
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|_| C64::new(if rng.random::<bool>() { s } else { -s }, 0.0))
        .collect()
}

/// Mean of `⟨ψ_k| f |ψ_k⟩` over `samples` normalized Rademacher probes, an
/// unbiased estimate of `Tr(f)/N`, with its standard error.
pub fn hutchinson_trace_estimate<F>(
    apply_f: F,
    n: usize,
    samples: usize,
    key: u64,
) -> Result<EstimateRecord>
where
    F: Fn(&[C64]) -> Vec<C64> + Sync,
{
    if samples == 0 || n == 0 {
        return Err(Error::Contract(
            "at least one probe of positive dimension is needed".into(),
        ));
    }
    let values: Vec<C64> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let psi = rademacher_probe(n, key, k);
            let fpsi = apply_f(&psi);
            psi.iter().zip(&fpsi).map(|(a, b)| a.conj() * b).sum()
        })
        .collect();
    let mean = values.iter().sum::<C64>() / samples as f64;
    let std_error = if samples > 1 {
        let var = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (samples - 1) as f64;
        (var / samples as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(EstimateRecord {
        value: [mean.re, mean.im],
        epsilon: std_error,
        delta: None,
        queries: None,
        samples: Some(samples),
        std_error: Some(std_error),
        key,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;

    #[test]
    fn query_formula() {
        assert_eq!(qae_queries(1e-2, 1e-2), (100.0 * 100f64.ln()).ceil() as u64);
    }

    #[test]
    fn estimates_are_keyed() {
        let a = amplitude_estimate(C64::new(0.5, 0.0), 0.1, 0.05, 7).unwrap();
        let b = amplitude_estimate(C64::new(0.5, 0.0), 0.1, 0.05, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.std_error.is_none());
    }

    #[test]
    fn zero_amplitude_stays_within_eps() {
        let hits = (0..2000)
            .filter(|&k| {
                amplitude_estimate(ZERO, 0.05, 1e-6, k)
                    .unwrap()
                    .value()
                    .norm()
                    <= 0.05
            })
            .count();
        assert_eq!(hits, 2000);
    }

    #[test]
    fn identity_trace() {
        let be = BlockEncoding::identity(3);
        assert!((entangled_trace(&be) - 1.0).norm() < 1e-15);
        let est = hutchinson_trace_estimate(|v| v.to_vec(), 16, 8, 3).unwrap();
        assert!((est.value() - 1.0).norm() < 1e-14);
        assert!(est.std_error.unwrap() < 1e-14);
    }

    #[test]
    fn element_bookkeeping() {
        let h = CMatrix::from_fn(4, 4, |i, j| {
            C64::new(if i.abs_diff(j) == 1 { 0.3 } else { 0.0 }, 0.0)
        });
        let be = BlockEncoding::dilation(&h, 1.0).unwrap();
        assert!((matrix_element(&be, 1, 2).unwrap() - 0.3).norm() < 1e-12);
        assert!(matrix_element(&be, 0, 0).unwrap().norm() < 1e-12);
        assert!(matrix_element(&be, 4, 0).is_err());
    }
}
