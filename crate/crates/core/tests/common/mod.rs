#![allow(dead_code)]

use ppds::convex::{to_inclusion, CompositeProblem, DualTerm};
use ppds::linalg::{self, spd_factor, DenseMatrix, JitterPolicy};
use ppds::operators::{self, make_affine_projector, FixedPointMap, LinearMap};
use ppds::solver::InclusionProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    DenseMatrix::random_gaussian(len, 1, rng).as_slice().to_vec()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// `‖M‖` as the square root of the largest eigenvalue of `MMᵀ`.
pub fn jacobi_norm(m: &DenseMatrix) -> f64 {
    let g = if m.rows() <= m.cols() { m.gram_rows() } else { m.transpose().gram_rows() };
    jacobi_eigenvalues(&g).into_iter().fold(0.0, f64::max).sqrt()
}

/// Subgradient of `‖·‖₁` at `x`: the sign where nonzero, a uniform draw in
/// `(−0.9, 0.9)` elsewhere so the planted point is nondegenerate.
fn planted_subgradient(x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    x.iter().map(|&v| if v != 0.0 { v.signum() } else { rng.random_range(-0.9..0.9) }).collect()
}

/// Gaussian vector with roughly half of its entries set to zero.
fn sparse_gaussian(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    gaussian_vec(len, rng).into_iter().map(|v| if rng.random::<bool>() { v } else { 0.0 }).collect()
}

/// A problem with an exactly known primal-dual solution.
pub struct Planted {
    pub problem: InclusionProblem,
    pub x_hat: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub l_norm: f64,
}

fn affine_set_through(x: &[f64], rows: usize, rng: &mut ChaCha8Rng) -> FixedPointMap {
    let k = DenseMatrix::random_gaussian(rows, x.len(), rng);
    let c = linalg::matvec(&k, x).unwrap();
    let gram = k.gram_rows();
    let factor = spd_factor(&gram, JitterPolicy::default_for(&gram)).unwrap();
    make_affine_projector(k, c, factor).unwrap()
}

/// `f = ‖·‖₁ + (ρ/2)‖·−a‖²`, `g = ι_{b}`, `T` the projector onto an affine set
/// containing `x̂`. With `s ∈ ∂‖x̂‖₁`, `a = x̂ + (s + Lᵀû)/ρ` and `b = Lx̂`
/// make `(x̂, û)` the unique saddle point.
pub fn planted_accelerated(seed: u64, n: usize, m: usize, l_scale: f64, rho: f64) -> Planted {
    let mut r = rng(seed);
    let lm = DenseMatrix::random_gaussian(m, n, &mut r);
    let lm = DenseMatrix::new(m, n, lm.as_slice().iter().map(|v| v * l_scale).collect()).unwrap();
    let x_hat = sparse_gaussian(n, &mut r);
    let u_hat = gaussian_vec(m, &mut r);
    let s = planted_subgradient(&x_hat, &mut r);
    let ltu = linalg::adjoint_matvec(&lm, &u_hat).unwrap();
    let a: Vec<f64> = (0..n).map(|i| x_hat[i] + (s[i] + ltu[i]) / rho).collect();
    let b = linalg::matvec(&lm, &x_hat).unwrap();
    let t = affine_set_through(&x_hat, n / 5, &mut r);

    let l_norm = jacobi_norm(&lm);
    let l = LinearMap::from_matrix_with_norm(lm, l_norm);
    let mut p = CompositeProblem::new(
        l,
        rho,
        move |x, t| operators::prox_l1_plus_quadratic(&a, rho, t, x),
        DualTerm::PointIndicator(b),
        0.0,
    );
    p.x_proj = t;
    Planted { problem: to_inclusion(&p).unwrap(), x_hat, u_hat, l_norm }
}

/// `f = ‖·‖₁ + (ρ/2)‖·−a‖²` and `g* = ‖·‖₁ + (χ/2)‖·−c‖²`, with `T` an affine
/// projector through `x̂`. Planted through `Lᵀû ∈ −∂f(x̂)` and `Lx̂ ∈ ∂g*(û)`.
pub fn planted_linear(seed: u64, n: usize, m: usize, l_scale: f64, rho: f64, chi: f64) -> Planted {
    let mut r = rng(seed);
    let lm = DenseMatrix::random_gaussian(m, n, &mut r);
    let lm = DenseMatrix::new(m, n, lm.as_slice().iter().map(|v| v * l_scale).collect()).unwrap();
    let x_hat = sparse_gaussian(n, &mut r);
    let u_hat = sparse_gaussian(m, &mut r);
    let sx = planted_subgradient(&x_hat, &mut r);
    let su = planted_subgradient(&u_hat, &mut r);
    let ltu = linalg::adjoint_matvec(&lm, &u_hat).unwrap();
    let lx = linalg::matvec(&lm, &x_hat).unwrap();
    let a: Vec<f64> = (0..n).map(|i| x_hat[i] + (sx[i] + ltu[i]) / rho).collect();
    let c: Vec<f64> = (0..m).map(|i| u_hat[i] + (su[i] - lx[i]) / chi).collect();
    let t = affine_set_through(&x_hat, n / 5, &mut r);

    let l_norm = jacobi_norm(&lm);
    let l = LinearMap::from_matrix_with_norm(lm, l_norm);
    let g =
        DualTerm::ConjugateProx(Arc::new(move |u: &[f64], t: f64| operators::prox_l1_plus_quadratic(&c, chi, t, u)));
    let mut p = CompositeProblem::new(l, rho, move |x, t| operators::prox_l1_plus_quadratic(&a, rho, t, x), g, chi);
    p.x_proj = t;
    Planted { problem: to_inclusion(&p).unwrap(), x_hat, u_hat, l_norm }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
