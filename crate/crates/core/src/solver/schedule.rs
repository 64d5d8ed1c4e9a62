//! Step-size regimes and their admissibility checks.

use serde::{Deserialize, Serialize};

use super::{InclusionProblem, IterationState, SolverError};

/// Relative tolerance separating "equality" from "strict" in the step-size
/// condition.
pub const EQUALITY_RTOL: f64 = 1e-12;

/// `1/(2m)`, with `m = +∞` mapping to 0.
#[inline]
pub(crate) fn half_inverse(modulus: f64) -> f64 {
    if modulus.is_infinite() {
        0.0
    } else {
        0.5 / modulus
    }
}

/// `1/(4m)`, with `m = +∞` mapping to 0.
#[inline]
pub(crate) fn quarter_inverse(modulus: f64) -> f64 {
    half_inverse(modulus) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepsizeCheck {
    StrictlySatisfied,
    SatisfiedWithEquality,
    Violated,
}

/// Classifies `‖L‖²` against `(1/τ − 1/(2β))(1/γ − 1/(2δ))`.
///
/// Requires `τ ∈ (0, 2β)` and `γ ∈ (0, 2δ)`; anything else is `Violated`.
pub fn validate_stepsizes(tau: f64, gamma: f64, beta: f64, delta: f64, l_norm: f64) -> StepsizeCheck {
    let in_range = |s: f64, m: f64| s > 0.0 && s.is_finite() && s < 2.0 * m;
    if !in_range(tau, beta) || !in_range(gamma, delta) {
        return StepsizeCheck::Violated;
    }
    let rhs = (1.0 / tau - half_inverse(beta)) * (1.0 / gamma - half_inverse(delta));
    let lhs = l_norm * l_norm;
    if (rhs - lhs).abs() <= EQUALITY_RTOL * rhs.abs().max(lhs) {
        StepsizeCheck::SatisfiedWithEquality
    } else if rhs > lhs {
        StepsizeCheck::StrictlySatisfied
    } else {
        StepsizeCheck::Violated
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMembership {
    pub in_rb: bool,
    pub in_sb: bool,
}

/// Membership of `(τ, γ)` in the two step-size regions compared for
/// `‖L‖ = 1`, `β = δ = b`:
///
/// * `R_b`: `min{(1 − √(τγ))/τ, (1 − √(τγ))/γ} > 1/(2b)` (the older,
///   more restrictive condition),
/// * `S_b`: `(1 − τ/(2b))(1 − γ/(2b)) > τγ`.
///
/// Points outside `[0, 2b]²` belong to neither.
pub fn stepsize_region_membership(tau: f64, gamma: f64, b: f64) -> RegionMembership {
    let inside = |s: f64| (0.0..=2.0 * b).contains(&s);
    if !inside(tau) || !inside(gamma) {
        return RegionMembership { in_rb: false, in_sb: false };
    }
    let root = (tau * gamma).sqrt();
    let threshold = 1.0 / (2.0 * b);
    // x/0 is +∞ for the positive numerator, which is the correct limit here
    let in_rb = ((1.0 - root) / tau).min((1.0 - root) / gamma) > threshold;
    let in_sb = (1.0 - tau / (2.0 * b)) * (1.0 - gamma / (2.0 * b)) > tau * gamma;
    RegionMembership { in_rb, in_sb }
}

/// Constant parameters of the linearly convergent regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearRate {
    pub tau: f64,
    pub gamma: f64,
    pub theta: f64,
    pub mu: f64,
    pub alpha: f64,
    pub omega: f64,
}

/// Parameter regime driving `(τ_k, γ_k, θ_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSchedule {
    /// Constant steps; weak convergence when the step-size condition is strict.
    Static { tau: f64, gamma: f64, theta: f64 },
    /// `θ_k = 1/√(1+2ρτ_k)`, `τ_{k+1} = θ_kτ_k`, `γ_{k+1} = γ_k/θ_k`.
    /// Needs `χ = 0`, `D⁻¹ = 0` and the step-size condition with equality.
    Accelerated { tau0: f64, gamma0: f64, rho: f64 },
    /// Constant steps from [`linear_rate_params`]; needs `ρ, χ > 0`.
    LinearRate(LinearRate),
}

/// Step sizes for one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub tau: f64,
    pub gamma: f64,
    pub theta: f64,
}

fn accelerated_theta(rho: f64, tau: f64) -> f64 {
    1.0 / (1.0 + 2.0 * rho * tau).sqrt()
}

impl StepSchedule {
    /// Accelerated schedule whose `γ₀` makes the step-size condition an
    /// equality, `γ₀ = (1/τ₀ − 1/(2β))/‖L‖²`.
    ///
    /// Rejects problems outside the regime's hypotheses (`χ > 0`, `δ < ∞`,
    /// `ρ = 0`) and `τ₀ ∉ (0, 2β)`.
    pub fn accelerated_for(problem: &InclusionProblem, tau0: f64) -> Result<Self, SolverError> {
        let rho = problem.rho();
        if problem.chi() > 0.0 || problem.delta().is_finite() {
            return Err(SolverError::RegimeMismatch("accelerated regime requires chi = 0 and D^-1 = 0".into()));
        }
        if rho <= 0.0 {
            return Err(SolverError::RegimeMismatch("accelerated regime requires rho > 0".into()));
        }
        if !(tau0 > 0.0 && tau0 < 2.0 * problem.beta()) {
            return Err(SolverError::RegimeMismatch(format!("tau0 = {tau0} outside (0, 2 beta)")));
        }
        let l2 = problem.l().norm_bound().powi(2);
        if l2 == 0.0 {
            return Err(SolverError::RegimeMismatch("accelerated regime requires a nonzero L".into()));
        }
        let gamma0 = (1.0 / tau0 - half_inverse(problem.beta())) / l2;
        Ok(StepSchedule::Accelerated { tau0, gamma0, rho })
    }

    /// Step sizes for iteration 0.
    pub fn initial(&self) -> StepParams {
        match *self {
            StepSchedule::Static { tau, gamma, theta } => StepParams { tau, gamma, theta },
            StepSchedule::Accelerated { tau0, gamma0, rho } => {
                StepParams { tau: tau0, gamma: gamma0, theta: accelerated_theta(rho, tau0) }
            }
            StepSchedule::LinearRate(p) => StepParams { tau: p.tau, gamma: p.gamma, theta: p.theta },
        }
    }

    /// `(τ₀, γ₀)` used to check the step-size condition.
    pub fn base_steps(&self) -> (f64, f64) {
        let p = self.initial();
        (p.tau, p.gamma)
    }
}

/// Step sizes for iteration `k + 1` given the state at iteration `k`.
///
/// For the accelerated regime `θ_k` is recomputed from `τ_k`, so the returned
/// `theta` is `θ_{k+1} = 1/√(1+2ρτ_{k+1})`.
pub fn schedule_advance(schedule: &StepSchedule, state: &IterationState) -> StepParams {
    match *schedule {
        StepSchedule::Accelerated { rho, .. } => {
            let theta_k = accelerated_theta(rho, state.tau);
            let tau = theta_k * state.tau;
            let gamma = state.gamma / theta_k;
            StepParams { tau, gamma, theta: accelerated_theta(rho, tau) }
        }
        StepSchedule::Static { .. } | StepSchedule::LinearRate(_) => {
            StepParams { tau: state.tau, gamma: state.gamma, theta: state.theta }
        }
    }
}

/// Parameters of the linearly convergent regime:
///
/// * `μ = 2√(ρχ)/‖L‖`
/// * `α = min{μρ/(ρ + μ/(4β)), μχ/(χ + μ/(4δ))}`
/// * `τ = 2βμ/(μ + 4βρ)`, `γ = 2δμ/(μ + 4δχ)`
/// * `ω = (1+θ)/(2+α)`
///
/// Infinite `β`/`δ` are handled through `1/β = 0`.
pub fn linear_rate_params(
    rho: f64,
    chi: f64,
    beta: f64,
    delta: f64,
    l_norm: f64,
    theta: f64,
) -> Result<LinearRate, SolverError> {
    if !(rho > 0.0 && chi > 0.0) {
        return Err(SolverError::RegimeMismatch("linear-rate regime requires rho > 0 and chi > 0".into()));
    }
    if !(l_norm > 0.0) {
        return Err(SolverError::RegimeMismatch("linear-rate regime requires a nonzero L".into()));
    }
    let mu = 2.0 * (rho * chi).sqrt() / l_norm;
    let alpha = (mu * rho / (rho + mu * quarter_inverse(beta))).min(mu * chi / (chi + mu * quarter_inverse(delta)));
    if !(theta > 1.0 / (1.0 + alpha) && theta <= 1.0) {
        return Err(SolverError::ThetaOutOfRange { theta, lower: 1.0 / (1.0 + alpha) });
    }
    // 2βμ/(μ + 4βρ) rewritten as 2μ/(μ/β + 4ρ) so β = ∞ is exact
    let inv = |m: f64| if m.is_infinite() { 0.0 } else { 1.0 / m };
    let tau = 2.0 * mu / (mu * inv(beta) + 4.0 * rho);
    let gamma = 2.0 * mu / (mu * inv(delta) + 4.0 * chi);
    let omega = (1.0 + theta) / (2.0 + alpha);
    let check = validate_stepsizes(tau, gamma, beta, delta, l_norm);
    if check != StepsizeCheck::SatisfiedWithEquality {
        return Err(SolverError::RegimeMismatch(format!(
            "linear-rate step sizes do not meet the step-size condition with equality ({check:?})"
        )));
    }
    Ok(LinearRate { tau, gamma, theta, mu, alpha, omega })
}
