//! Exact solver for small equality-constrained ℓ1 problems by vertex
//! enumeration of the LP `min Σ(x⁺ + x⁻) s.t. L(x⁺ − x⁻) = b, x± ≥ 0`.
//!
//! A basic feasible solution never has both `x⁺_j` and `x⁻_j` basic with
//! nonzero values, so it suffices to enumerate column subsets `B` of `L` with
//! `|B| = rank L`, solve `L_B y = b`, and read the signs off `y`.

use thiserror::Error;

use super::EqualityConstrainedL1;

pub const ORACLE_MAX_DIM: usize = 24;
pub const ORACLE_MAX_CONSTRAINTS: usize = 12;

/// Relative objective gap below which two distinct vertices count as tied.
const TIE_RTOL: f64 = 1e-9;
/// Two vertices with ℓ∞ distance below this are the same point.
const SAME_POINT_TOL: f64 = 1e-7;
const PIVOT_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: N = {dim}, constraints = {constraints}")]
    TooLarge { dim: usize, constraints: usize },
    #[error("constraint matrix does not have full row rank")]
    RankDeficient,
    #[error("optimum is not unique: distinct vertices tie at objective {objective}")]
    Degenerate { objective: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Solves a square system in place by Gaussian elimination with partial
/// pivoting. `a` is row-major `n × n`. Returns `None` on a relative pivot
/// below `PIVOT_RTOL`.
fn gauss_solve(a: &mut [f64], rhs: &mut [f64], n: usize, scale: f64) -> Option<()> {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= PIVOT_RTOL * scale {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            rhs.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f != 0.0 {
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = rhs[col];
        for j in col + 1..n {
            s -= a[col * n + j] * rhs[j];
        }
        rhs[col] = s / a[col * n + col];
    }
    Some(())
}

/// Advances `idx` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The unique minimizer of `‖x‖₁` subject to `Rx = c, Sx = d`.
///
/// Requires `L = (R; S)` to have full row rank. Fails with
/// [`OracleError::Degenerate`] when two distinct vertices attain the optimum.
pub fn l1_lp_oracle(inst: &EqualityConstrainedL1) -> Result<Vec<f64>, OracleError> {
    let (l, b) = inst.stacked().map_err(|e| OracleError::Dimension(e.to_string()))?;
    let (m, n) = (l.rows(), l.cols());
    if n > ORACLE_MAX_DIM || m > ORACLE_MAX_CONSTRAINTS || m > n {
        return Err(OracleError::TooLarge { dim: n, constraints: m });
    }
    if m == 0 {
        return Ok(vec![0.0; n]);
    }
    let scale = l.as_slice().iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);

    let mut idx: Vec<usize> = (0..m).collect();
    let mut a = vec![0.0; m * m];
    let mut y = vec![0.0; m];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut tied = false;
    loop {
        for r in 0..m {
            for (k, &j) in idx.iter().enumerate() {
                a[r * m + k] = l.get(r, j);
            }
        }
        y.copy_from_slice(&b);
        if gauss_solve(&mut a, &mut y, m, scale).is_some() {
            let obj: f64 = y.iter().map(|v| v.abs()).sum();
            let mut x = vec![0.0; n];
            for (k, &j) in idx.iter().enumerate() {
                x[j] = y[k];
            }
            match &best {
                None => best = Some((obj, x)),
                Some((bo, bx)) => {
                    let tol = TIE_RTOL * bo.abs().max(1.0);
                    if obj < bo - tol {
                        best = Some((obj, x));
                        tied = false;
                    } else if (obj - bo).abs() <= tol {
                        let dist = x.iter().zip(bx).fold(0.0f64, |s, (p, q)| s.max((p - q).abs()));
                        if dist > SAME_POINT_TOL {
                            tied = true;
                        }
                        if obj < *bo {
                            best = Some((obj, x));
                        }
                    }
                }
            }
        }
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    match best {
        None => Err(OracleError::RankDeficient),
        Some((obj, _)) if tied => Err(OracleError::Degenerate { objective: obj }),
        Some((_, x)) => Ok(x),
    }
}
