//! Small dense and sparse complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation of `a` from its conjugate transpose.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Spectral norm of a Hermitian matrix (largest absolute eigenvalue).
pub fn hermitian_norm(a: &CMatrix) -> f64 {
    let eig = a.clone().symmetric_eigen();
    eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Operator norm of `U†U - I`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    let gram = u.adjoint() * u - CMatrix::identity(n, n);
    hermitian_norm(&gram)
}

/// Spectral norm via singular values; exact up to rounding.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    a.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Power-iteration estimate of the spectral norm of a matrix-free operator.
///
/// Iterates on `A†A`; the returned value never exceeds the true norm by more
/// than rounding, so it is safe to use as a lower bound.
pub fn power_norm_estimate<F, G>(dim: usize, apply: F, apply_adjoint: G, iters: usize) -> f64
where
    F: Fn(&[C64]) -> Vec<C64>,
    G: Fn(&[C64]) -> Vec<C64>,
{
    if dim == 0 {
        return 0.0;
    }
    // Deterministic, non-degenerate start vector.
    let mut v: Vec<C64> = (0..dim)
        .map(|k| {
            C64::new(
                1.0 + 0.37 * ((k * 7919) % 101) as f64 / 101.0,
                0.11 * (k % 5) as f64,
            )
        })
        .collect();
    normalize(&mut v);
    let mut estimate = 0.0;
    for _ in 0..iters {
        let w = apply(&v);
        let w_norm = norm(&w);
        if w_norm == 0.0 {
            return 0.0;
        }
        estimate = w_norm;
        let mut back = apply_adjoint(&w);
        let back_norm = norm(&back);
        if back_norm == 0.0 {
            break;
        }
        back.iter_mut().for_each(|x| *x /= back_norm);
        v = back;
    }
    estimate
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [C64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Evaluates `f(A)` for Hermitian `A` through its eigendecomposition.
pub fn hermitian_function<F: Fn(f64) -> C64>(a: &CMatrix, f: F) -> CMatrix {
    let eig = a.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let n = a.nrows();
    let mut scaled = v.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let fk = f(lambda);
        for i in 0..n {
            scaled[(i, k)] *= fk;
        }
    }
    scaled * v.adjoint()
}

/// Principal square root of a Hermitian positive semidefinite matrix; tiny
/// negative eigenvalues from rounding are clipped to zero.
pub fn psd_sqrt(a: &CMatrix) -> CMatrix {
    hermitian_function(a, |x| C64::new(x.max(0.0).sqrt(), 0.0))
}

/// Compressed sparse row matrix with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triples; duplicates are summed in
    /// input order and structural zeros are kept.
    pub fn from_triples(dim: usize, triples: &[(usize, usize, C64)]) -> Self {
        let mut sorted: Vec<(usize, usize, C64)> = triples.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals: Vec<C64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            assert!(
                r < dim && c < dim,
                "triple ({r},{c}) outside dimension {dim}"
            );
            if last == Some((r, c)) {
                *vals.last_mut().expect("previous entry") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(a: &CMatrix) -> Self {
        let mut triples = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != ZERO {
                    triples.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triples(a.nrows(), &triples)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries of row `i` as `(col, value)` in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map_or(ZERO, |(_, v)| v)
    }

    pub fn triples(&self) -> Vec<(usize, usize, C64)> {
        (0..self.dim)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    /// `self · b` for a dense `b`.
    pub fn mul_dense(&self, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, b.ncols());
        for i in 0..self.dim {
            for (k, v) in self.row(i) {
                for c in 0..b.ncols() {
                    out[(i, c)] += v * b[(k, c)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> SparseMatrix {
        let triples: Vec<_> = self
            .triples()
            .into_iter()
            .map(|(i, j, v)| (j, i, v.conj()))
            .collect();
        Self::from_triples(self.dim, &triples)
    }

    pub fn scale(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut a = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                a[(i, j)] += v;
            }
        }
        a
    }

    /// Largest entrywise deviation from Hermiticity over stored entries.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Power-iteration estimate of the spectral norm.
    pub fn norm_estimate(&self, iters: usize) -> f64 {
        let adj = self.adjoint();
        power_norm_estimate(self.dim, |v| self.matvec(v), |v| adj.matvec(v), iters)
    }

    /// Largest absolute row sum; an upper bound on the spectral norm of a
    /// Hermitian matrix.
    pub fn max_row_abs_sum(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
