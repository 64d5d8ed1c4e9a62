//! Dense real linear-algebra kernels.
//!
//! Matrices are stored row-major. Vectors are plain `Vec<f64>` / `&[f64]`;
//! every constructor here rejects non-finite entries so that NaN and Inf never
//! enter the solver through a matrix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative tolerance for [`operator_norm`].
pub const NORM_TOL: f64 = 1e-9;
/// Default iteration cap for [`operator_norm`].
pub const NORM_MAX_ITER: usize = 5000;
/// Default seed for the power-iteration start vector.
pub const NORM_SEED: u64 = 0x5eed_0f11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite after {tries} jitter escalations")]
    NotSpd { tries: usize },
    #[error("power iteration did not converge after {iterations} iterations (last relative change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("non-finite entry")]
    NonFinite,
    #[error("ragged rows: row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
}

fn check_dim(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}

/// Dense row-major matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        check_dim(rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. An empty slice yields a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::Ragged { row: i, expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Fills a `rows x cols` matrix with i.i.d. standard Gaussian entries.
    pub fn random_gaussian<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Stacks `self` on top of `other`; column counts must agree.
    pub fn vstack(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.rows == 0 {
            return Ok(other.clone());
        }
        if other.rows == 0 {
            return Ok(self.clone());
        }
        check_dim(self.cols, other.cols)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { rows: self.rows + other.rows, cols: self.cols, data })
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: rows.len(), cols: self.cols, data }
    }

    /// Gram matrix `M Mᵀ` (rows x rows).
    pub fn gram_rows(&self) -> Self {
        let n = self.rows;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g.data[i * n + j] = v;
                g.data[j * n + i] = v;
            }
        }
        g
    }

    /// `out = M v`. Dimensions are the caller's responsibility.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), v);
        }
    }

    /// `out = Mᵀ v`. Dimensions are the caller's responsibility.
    pub fn mul_transpose_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                axpy(vi, self.row(i), out);
            }
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = LinalgError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::from_rows(&rows)
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        (0..m.rows).map(|i| m.row(i).to_vec()).collect()
    }
}

/// Inner product. Four independent accumulators let the compiler vectorize.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm_sq(v: &[f64]) -> f64 {
    dot(v, v)
}

pub fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖a - b‖²`
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Checked `M v`.
pub fn matvec(m: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
    check_dim(m.cols, v.len())?;
    let mut out = vec![0.0; m.rows];
    m.mul_vec_into(v, &mut out);
    Ok(out)
}

/// Checked `Mᵀ v`.
pub fn adjoint_matvec(m: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
    check_dim(m.rows, v.len())?;
    let mut out = vec![0.0; m.cols];
    m.mul_transpose_vec_into(v, &mut out);
    Ok(out)
}

/// Diagonal jitter escalation used by [`spd_factor`].
///
/// The first attempt is always unjittered; attempt `i >= 1` adds
/// `initial * growth^(i-1)` to the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    pub initial: f64,
    pub growth: f64,
    pub max_tries: usize,
}

impl JitterPolicy {
    /// `1e-12 · trace/dim`, growing ×10 for up to 5 escalations.
    pub fn default_for(m: &DenseMatrix) -> Self {
        let dim = m.rows().max(1) as f64;
        let scale = (m.trace().abs() / dim).max(f64::MIN_POSITIVE);
        Self { initial: 1e-12 * scale, growth: 10.0, max_tries: 5 }
    }
}

/// Cholesky factor `G` with `G Gᵀ = M + jitter_used · I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    lower: DenseMatrix,
    jitter_used: f64,
}

impl SpdFactor {
    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// Solves in place; `b.len()` must equal `dim()`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let l = &self.lower;
        for i in 0..n {
            let s = b[i] - dot(&l.row(i)[..i], &b[..i]);
            b[i] = s / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= l.get(k, i) * b[k];
            }
            b[i] = s / l.get(i, i);
        }
    }
}

fn cholesky(m: &DenseMatrix, jitter: f64) -> Option<DenseMatrix> {
    let n = m.rows();
    let max_diag = (0..n).map(|i| m.get(i, i).abs()).fold(0.0, f64::max) + jitter;
    let floor = f64::EPSILON * n as f64 * max_diag;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let row_j = &l.data[j * n..j * n + j];
        let d = m.get(j, j) + jitter - dot(row_j, row_j);
        if !(d > floor) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l.data[j * n + j] = djj;
        for i in j + 1..n {
            let s = m.get(i, j) - dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
            l.data[i * n + j] = s / djj;
        }
    }
    Some(l)
}

/// Factors a symmetric positive-definite matrix, escalating diagonal jitter
/// until the Cholesky recurrence succeeds.
pub fn spd_factor(m: &DenseMatrix, policy: JitterPolicy) -> Result<SpdFactor, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let scale = norm_inf(m.as_slice()).max(f64::MIN_POSITIVE);
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    if asym > 1e-12 * scale {
        return Err(LinalgError::NotSymmetric(asym / scale));
    }

    let mut jitter = 0.0;
    for attempt in 0..=policy.max_tries {
        if attempt == 1 {
            jitter = policy.initial;
        } else if attempt > 1 {
            jitter *= policy.growth;
        }
        if let Some(lower) = cholesky(m, jitter) {
            return Ok(SpdFactor { lower, jitter_used: jitter });
        }
    }
    Err(LinalgError::NotSpd { tries: policy.max_tries })
}

/// Solves `(M + jitter·I) x = b` with a factor from [`spd_factor`].
pub fn spd_solve(factor: &SpdFactor, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    check_dim(factor.dim(), b.len())?;
    let mut x = b.to_vec();
    factor.solve_in_place(&mut x);
    Ok(x)
}

/// Estimates the spectral norm `‖M‖₂` by power iteration on `MᵀM`.
///
/// The start vector is drawn from a ChaCha stream seeded with `seed`, so the
/// result is bit-reproducible. Iteration stops once the Rayleigh quotient
/// changes by at most `tol` relative.
pub fn operator_norm(m: &DenseMatrix, tol: f64, max_iter: usize, seed: u64) -> Result<f64, LinalgError> {
    assert!(tol > 0.0, "operator_norm: tol must be positive");
    if m.rows() == 0 || m.cols() == 0 || m.as_slice().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..m.cols()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut mv = vec![0.0; m.rows()];
    let mut w = vec![0.0; m.cols()];
    let mut lambda_prev = f64::NAN;
    let mut change = f64::INFINITY;
    for _ in 0..max_iter {
        m.mul_vec_into(&v, &mut mv);
        m.mul_transpose_vec_into(&mv, &mut w);
        // ‖v‖ = 1, so ⟨v, MᵀMv⟩ = ‖Mv‖² is the Rayleigh quotient.
        let lambda = norm_sq(&mv);
        let nw = norm(&w);
        if nw == 0.0 {
            // Start vector fell into the null space; the estimate is exact for it.
            return Ok(lambda.sqrt());
        }
        if lambda_prev.is_finite() {
            change = (lambda - lambda_prev).abs() / lambda.max(f64::MIN_POSITIVE);
            if change <= tol {
                return Ok(lambda.sqrt());
            }
        }
        lambda_prev = lambda;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    Err(LinalgError::NoConvergence { iterations: max_iter, change })
}

/// [`operator_norm`] with the crate defaults.
pub fn operator_norm_default(m: &DenseMatrix) -> Result<f64, LinalgError> {
    operator_norm(m, NORM_TOL, NORM_MAX_ITER, NORM_SEED)
}
