//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::too_many_arguments)]

use qla_disorder::lattice::RandomnessMode;
use qla_disorder::linalg::{CMatrix, C64};
use qla_disorder::{Boundary, DisorderSpec, DisorderedLattice, LatticeSpec};

pub fn alloy(key: u64) -> DisorderSpec {
    let mut s = DisorderSpec::binary_alloy(
        0.4,
        [[-1.0, -0.5], [-0.5, -1.5]],
        [[0.2, 0.3], [0.3, 0.1]],
        key,
    );
    s.bits = 4;
    s
}

pub fn structural(key: u64) -> DisorderSpec {
    let mut s = DisorderSpec::structural(-1.0, 0.5, 0.2, 6, key);
    s.bits = 4;
    s
}

pub fn magnetic(key: u64) -> DisorderSpec {
    let mut s = DisorderSpec::magnetic(-1.0, 0.0, 4, key);
    s.bits = 4;
    s
}

pub fn clean() -> DisorderSpec {
    let mut s = DisorderSpec::clean(-1.0, 0.0);
    s.bits = 2;
    s
}

pub fn model(extents: &[usize], boundary: Boundary, spec: DisorderSpec) -> DisorderedLattice {
    DisorderedLattice::new(&LatticeSpec::new(extents, boundary), &spec).expect("valid test model")
}

/// Twelve instances over 1D/2D, every disorder kind and N ∈ {8, 16, 32, 64}.
pub fn instances() -> Vec<(String, DisorderedLattice)> {
    let mut kwise = alloy(77);
    kwise.randomness = RandomnessMode::KWise { t: 4 };
    let mut nnn = LatticeSpec::chain(16, Boundary::Periodic);
    nnn.cutoff = 2.0;
    vec![
        (
            "chain8-clean-periodic".into(),
            model(&[8], Boundary::Periodic, clean()),
        ),
        (
            "chain16-alloy-open".into(),
            model(&[16], Boundary::Open, alloy(1)),
        ),
        (
            "chain32-structural-periodic".into(),
            model(&[32], Boundary::Periodic, structural(2)),
        ),
        (
            "chain64-magnetic-periodic".into(),
            model(&[64], Boundary::Periodic, magnetic(3)),
        ),
        (
            "chain64-alloy-periodic".into(),
            model(&[64], Boundary::Periodic, alloy(4)),
        ),
        (
            "square4x4-alloy-periodic".into(),
            model(&[4, 4], Boundary::Periodic, alloy(5)),
        ),
        (
            "rect4x8-structural-open".into(),
            model(&[4, 8], Boundary::Open, structural(6)),
        ),
        (
            "square8x8-magnetic-periodic".into(),
            model(&[8, 8], Boundary::Periodic, magnetic(7)),
        ),
        (
            "rect8x4-clean-open".into(),
            model(&[8, 4], Boundary::Open, clean()),
        ),
        (
            "chain16-nnn-alloy".into(),
            DisorderedLattice::new(&nnn, &alloy(8)).unwrap(),
        ),
        (
            "square8x8-alloy-periodic".into(),
            model(&[8, 8], Boundary::Periodic, alloy(9)),
        ),
        (
            "chain32-kwise-alloy".into(),
            model(&[32], Boundary::Periodic, kwise),
        ),
    ]
}

/// Eigenpairs of a Hermitian matrix straight from the dense solver.
pub fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let e = h.clone().symmetric_eigen();
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

pub fn matrix_function<F: Fn(f64) -> C64>(h: &CMatrix, f: F) -> CMatrix {
    let (vals, vecs) = eigh(h);
    let n = h.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        let fk = f(l);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += vecs[(i, k)] * fk * vecs[(j, k)].conj();
            }
        }
    }
    out
}

pub fn fermi(beta: f64, e: f64) -> f64 {
    0.5 * (1.0 - (0.5 * beta * e).tanh())
}

pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Brute-force Kubo–Bastin `σ^{xy}` from exact eigenpairs:
/// `(i/V) ∫_{-r}^{r} f_β(E − μ) (1/N) Σ_{mn} [v^x_{mn} s_n(E) v^y_{nm} g'_m(E) − c.c.] dE`
/// with `s_n = η/(π((E − λ_n)² + η²))`, `g'_m = −(E + iη − λ_m)^{-2}`.
pub fn kubo_oracle(
    h: &CMatrix,
    vx: &CMatrix,
    vy: &CMatrix,
    beta: f64,
    mu: f64,
    eta: f64,
    r: f64,
    volume: f64,
) -> C64 {
    let (vals, vecs) = eigh(h);
    let n = h.nrows();
    let ax = vecs.adjoint() * vx * &vecs;
    let ay = vecs.adjoint() * vy * &vecs;
    let integrand = |e: f64| -> C64 {
        let mut x = C64::new(0.0, 0.0);
        for m in 0..n {
            let z = C64::new(e - vals[m], eta);
            let gp = -(z * z).inv();
            for k in 0..n {
                let s = eta / (std::f64::consts::PI * ((e - vals[k]).powi(2) + eta * eta));
                x += ax[(m, k)] * s * ay[(k, m)] * gp;
            }
        }
        (x - x.conj()) * (fermi(beta, e - mu) / n as f64)
    };
    // X − X̄ is purely imaginary: integrate its imaginary part.
    let im = adaptive_simpson(&|e| integrand(e).im, -r, r, 1e-11);
    C64::new(0.0, 1.0 / volume) * C64::new(0.0, im)
}

/// Lorentzian `η/((ω − e)² + η²)`.
pub fn lorentzian(w: f64, e: f64, eta: f64) -> f64 {
    eta / ((w - e).powi(2) + eta * eta)
}

/// Proptest settings without on-disk failure persistence.
pub fn proptest_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}
