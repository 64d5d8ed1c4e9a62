//! Residuals and Lyapunov-type quantities used for stopping and for checking
//! the convergence regimes.

use crate::linalg::{dist_sq, norm_sq};

use super::schedule::{half_inverse, quarter_inverse};

/// `r_k = √((‖u⁺ − u‖² + ‖x⁺ − x‖²)/(‖u‖² + ‖x‖²))`.
///
/// Returns `+∞` when the previous iterate is zero; callers treat that as
/// "not yet measurable" rather than as divergence.
pub fn relative_error(prev_x: &[f64], prev_u: &[f64], curr_x: &[f64], curr_u: &[f64]) -> f64 {
    let denom = norm_sq(prev_u) + norm_sq(prev_x);
    if denom == 0.0 {
        return f64::INFINITY;
    }
    ((dist_sq(curr_u, prev_u) + dist_sq(curr_x, prev_x)) / denom).sqrt()
}

/// Weights of the linear-regime Lyapunov function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovWeights {
    pub rho: f64,
    pub chi: f64,
    pub mu: f64,
    pub beta: f64,
    pub delta: f64,
}

impl LyapunovWeights {
    /// `Ω = (χ + μ/(4δ))‖u − û‖² + (ρ + μ/(4β))‖x − x̂‖²`
    pub fn omega(&self, x: &[f64], u: &[f64], x_hat: &[f64], u_hat: &[f64]) -> f64 {
        (self.chi + self.mu * quarter_inverse(self.delta)) * dist_sq(u, u_hat)
            + (self.rho + self.mu * quarter_inverse(self.beta)) * dist_sq(x, x_hat)
    }

    /// Left side of the linear-rate bound, where the dual weight is reduced
    /// to `χ(1 − ω) + μ/(4δ)`; it must stay below `ω^k Ω₀`.
    pub fn contraction_lhs(&self, rate: f64, x: &[f64], u: &[f64], x_hat: &[f64], u_hat: &[f64]) -> f64 {
        (self.chi * (1.0 - rate) + self.mu * quarter_inverse(self.delta)) * dist_sq(u, u_hat)
            + (self.rho + self.mu * quarter_inverse(self.beta)) * dist_sq(x, x_hat)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn omega_lyapunov(
    x: &[f64],
    u: &[f64],
    x_hat: &[f64],
    u_hat: &[f64],
    rho: f64,
    chi: f64,
    mu: f64,
    beta: f64,
    delta: f64,
) -> f64 {
    LyapunovWeights { rho, chi, mu, beta, delta }.omega(x, u, x_hat, u_hat)
}

/// Constant `C` in the accelerated bound `‖x^k − x̂‖² ≤ (1+ε) C / k²`:
///
/// `C = ‖x⁰ − x̂‖²/(ρ²τ₀²) + 2β‖L‖²/(ρ²(2β − τ₀)) ‖u⁰ − û‖²`.
pub fn accelerated_bound_constant(
    x0_dist_sq: f64,
    u0_dist_sq: f64,
    rho: f64,
    tau0: f64,
    beta: f64,
    l_norm: f64,
) -> f64 {
    // 2β/(2β − τ₀) = 1/(1 − τ₀/(2β))
    let dual_factor = 1.0 / (1.0 - tau0 * half_inverse(beta));
    x0_dist_sq / (rho * rho * tau0 * tau0) + dual_factor * l_norm * l_norm / (rho * rho) * u0_dist_sq
}
