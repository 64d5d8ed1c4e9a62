//! The projected primal-dual splitting iteration.
//!
//! One iteration, dual update first:
//!
//! ```text
//! η⁺ = J_{γB⁻¹}(u + γ(L x̄ − D⁻¹u))
//! u⁺ = P_V η⁺
//! p⁺ = J_{τA}(x − τ(L*u⁺ + Cx))
//! x⁺ = T p⁺
//! x̄⁺ = x⁺ + θ(p⁺ − x)
//! ```
//!
//! With `T = P_V = Id` this is the unprojected primal-dual method; the two
//! projections keep every iterate inside the a priori information sets.

mod diagnostics;
mod schedule;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, all_finite};
use crate::operators::{CocoerciveOp, FixedPointMap, LinearMap, MonotoneOp, OperatorError};

pub use diagnostics::{accelerated_bound_constant, omega_lyapunov, relative_error, LyapunovWeights};
pub(crate) use schedule::half_inverse;
pub use schedule::{
    linear_rate_params, schedule_advance, stepsize_region_membership, validate_stepsizes, LinearRate, RegionMembership,
    StepParams, StepSchedule, StepsizeCheck, EQUALITY_RTOL,
};

/// Default iteration guard for [`StopRule`].
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("range of L is not contained in V (deviation {0:e})")]
    RangeNotInSubspace(f64),
    #[error("non-finite iterate at iteration {k}")]
    NonFiniteIterate { k: usize },
    #[error("step sizes tau = {tau}, gamma = {gamma} outside (0, 2 beta) x (0, 2 delta)")]
    StepsizeOutOfRange { tau: f64, gamma: f64 },
    #[error("step-size condition is {found:?}, regime requires {required:?}")]
    StepsizeRegimeMismatch { found: StepsizeCheck, required: StepsizeCheck },
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("theta = {theta} must lie in ({lower}, 1]")]
    ThetaOutOfRange { theta: f64, lower: f64 },
}

/// `find x̂ ∈ Fix T` with `0 ∈ Ax̂ + L*(B □ D)(Lx̂) + Cx̂`, together with its
/// dual in `V`.
///
/// `A`, `B⁻¹` are given by resolvents (moduli `ρ`, `χ`), `C`, `D⁻¹` by
/// evaluation (cocoercivity moduli `β`, `δ`, `+∞` for zero).
#[derive(Debug, Clone)]
pub struct InclusionProblem {
    a: MonotoneOp,
    b_inv: MonotoneOp,
    c: CocoerciveOp,
    d_inv: CocoerciveOp,
    l: LinearMap,
    t: FixedPointMap,
    pv: FixedPointMap,
}

#[derive(Debug, Clone)]
pub struct InclusionProblemBuilder {
    problem: InclusionProblem,
}

impl InclusionProblemBuilder {
    pub fn a(mut self, op: MonotoneOp) -> Self {
        self.problem.a = op;
        self
    }

    pub fn b_inv(mut self, op: MonotoneOp) -> Self {
        self.problem.b_inv = op;
        self
    }

    pub fn c(mut self, op: CocoerciveOp) -> Self {
        self.problem.c = op;
        self
    }

    pub fn d_inv(mut self, op: CocoerciveOp) -> Self {
        self.problem.d_inv = op;
        self
    }

    pub fn t(mut self, map: FixedPointMap) -> Self {
        self.problem.t = map;
        self
    }

    pub fn pv(mut self, map: FixedPointMap) -> Self {
        self.problem.pv = map;
        self
    }

    pub fn build(self) -> Result<InclusionProblem, SolverError> {
        self.problem.validate()?;
        Ok(self.problem)
    }
}

impl InclusionProblem {
    /// Starts from `A = B⁻¹ = C = D⁻¹ = 0` and `T = P_V = Id`.
    pub fn builder(l: LinearMap) -> InclusionProblemBuilder {
        InclusionProblemBuilder {
            problem: InclusionProblem {
                a: MonotoneOp::zero(),
                b_inv: MonotoneOp::zero(),
                c: CocoerciveOp::zero(),
                d_inv: CocoerciveOp::zero(),
                l,
                t: FixedPointMap::identity(),
                pv: FixedPointMap::identity(),
            },
        }
    }

    /// Same problem with a different `T`.
    pub fn with_t(&self, t: FixedPointMap) -> Result<Self, SolverError> {
        let p = InclusionProblem { t, ..self.clone() };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), SolverError> {
        let n = self.primal_dim();
        let m = self.dual_dim();
        let zn = vec![0.0; n];
        let zm = vec![0.0; m];
        let check = |what: &'static str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(SolverError::DimensionMismatch { what, expected, found })
            }
        };
        check("A resolvent", n, self.a.resolvent(&zn, 1.0).len())?;
        check("C", n, self.c.eval(&zn).len())?;
        check("T", n, self.t.apply(&zn).len())?;
        check("B^-1 resolvent", m, self.b_inv.resolvent(&zm, 1.0).len())?;
        check("D^-1", m, self.d_inv.eval(&zm).len())?;
        check("P_V", m, self.pv.apply(&zm).len())?;

        if !self.pv.is_identity() {
            let mut rng = ChaCha8Rng::seed_from_u64(0xa11ce);
            for _ in 0..5 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let lx = self.l.apply(&x);
                let dev = linalg::norm(&linalg::sub(&self.pv.apply(&lx), &lx));
                if dev > 1e-10 * (1.0 + linalg::norm(&lx)) {
                    return Err(SolverError::RangeNotInSubspace(dev));
                }
            }
        }
        Ok(())
    }

    pub fn primal_dim(&self) -> usize {
        self.l.in_dim()
    }

    pub fn dual_dim(&self) -> usize {
        self.l.out_dim()
    }

    pub fn a(&self) -> &MonotoneOp {
        &self.a
    }

    pub fn b_inv(&self) -> &MonotoneOp {
        &self.b_inv
    }

    pub fn c(&self) -> &CocoerciveOp {
        &self.c
    }

    pub fn d_inv(&self) -> &CocoerciveOp {
        &self.d_inv
    }

    pub fn l(&self) -> &LinearMap {
        &self.l
    }

    pub fn t(&self) -> &FixedPointMap {
        &self.t
    }

    pub fn pv(&self) -> &FixedPointMap {
        &self.pv
    }

    pub fn rho(&self) -> f64 {
        self.a.strong_modulus()
    }

    pub fn chi(&self) -> f64 {
        self.b_inv.strong_modulus()
    }

    pub fn beta(&self) -> f64 {
        self.c.modulus()
    }

    pub fn delta(&self) -> f64 {
        self.d_inv.modulus()
    }
}

/// Iterate `(x^k, x̄^k, u^k)` with the step sizes for iteration `k` and the
/// auxiliary points `p^k`, `η^k` of the previous step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub k: usize,
    pub x: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub u: Vec<f64>,
    pub tau: f64,
    pub gamma: f64,
    pub theta: f64,
    pub last_p: Vec<f64>,
    pub last_eta: Vec<f64>,
}

impl IterationState {
    /// `x̄⁰ = x⁰`, `p⁰ = x⁰`, `η⁰ = u⁰`.
    pub fn new(x0: Vec<f64>, u0: Vec<f64>, params: StepParams) -> Self {
        Self {
            k: 0,
            x_bar: x0.clone(),
            last_p: x0.clone(),
            last_eta: u0.clone(),
            x: x0,
            u: u0,
            tau: params.tau,
            gamma: params.gamma,
            theta: params.theta,
        }
    }
}

/// One iteration of the projected primal-dual splitting. The returned state
/// keeps the current step sizes; advance them with [`schedule_advance`].
pub fn step(problem: &InclusionProblem, state: &IterationState) -> Result<IterationState, SolverError> {
    let (n, m) = (problem.primal_dim(), problem.dual_dim());
    for (what, expected, found) in [("x", n, state.x.len()), ("x_bar", n, state.x_bar.len()), ("u", m, state.u.len())] {
        if expected != found {
            return Err(SolverError::DimensionMismatch { what, expected, found });
        }
    }
    let (tau, gamma, theta) = (state.tau, state.gamma, state.theta);
    if !(tau > 0.0 && tau < 2.0 * problem.beta() && gamma > 0.0 && gamma < 2.0 * problem.delta()) {
        return Err(SolverError::StepsizeOutOfRange { tau, gamma });
    }

    // dual half
    let mut v = problem.l.apply(&state.x_bar);
    if !problem.d_inv.is_zero() {
        let dinv = problem.d_inv.eval(&state.u);
        v.iter_mut().zip(&dinv).for_each(|(vi, di)| *vi -= di);
    }
    v.iter_mut().zip(&state.u).for_each(|(vi, ui)| *vi = ui + gamma * *vi);
    let eta = problem.b_inv.resolvent(&v, gamma);
    let u = problem.pv.apply(&eta);

    // primal half
    let mut w = problem.l.apply_adjoint(&u);
    if !problem.c.is_zero() {
        let cx = problem.c.eval(&state.x);
        w.iter_mut().zip(&cx).for_each(|(wi, ci)| *wi += ci);
    }
    w.iter_mut().zip(&state.x).for_each(|(wi, xi)| *wi = xi - tau * *wi);
    let p = problem.a.resolvent(&w, tau);
    let x = problem.t.apply(&p);
    let x_bar: Vec<f64> = x.iter().zip(&p).zip(&state.x).map(|((xn, pn), xo)| xn + theta * (pn - xo)).collect();

    let k = state.k + 1;
    if !(all_finite(&eta) && all_finite(&u) && all_finite(&p) && all_finite(&x) && all_finite(&x_bar)) {
        return Err(SolverError::NonFiniteIterate { k });
    }
    Ok(IterationState { k, x, x_bar, u, tau, gamma, theta, last_p: p, last_eta: eta })
}

/// Checks that `schedule` is admissible for `problem`: strict step-size
/// condition for the static regime, equality plus the structural hypotheses
/// for the accelerated and linear-rate regimes.
pub fn check_regime(problem: &InclusionProblem, schedule: &StepSchedule) -> Result<(), SolverError> {
    let (tau, gamma) = schedule.base_steps();
    let found = validate_stepsizes(tau, gamma, problem.beta(), problem.delta(), problem.l.norm_bound());
    let require = |required: StepsizeCheck| {
        if found == required {
            Ok(())
        } else {
            Err(SolverError::StepsizeRegimeMismatch { found, required })
        }
    };
    match *schedule {
        StepSchedule::Static { theta, .. } => {
            if !(theta > 0.0 && theta <= 1.0) {
                return Err(SolverError::ThetaOutOfRange { theta, lower: 0.0 });
            }
            require(StepsizeCheck::StrictlySatisfied)
        }
        StepSchedule::Accelerated { rho, .. } => {
            if problem.chi() > 0.0 || problem.delta().is_finite() {
                return Err(SolverError::RegimeMismatch("accelerated regime requires chi = 0 and D^-1 = 0".into()));
            }
            if !(rho > 0.0 && rho <= problem.rho()) {
                return Err(SolverError::RegimeMismatch(format!(
                    "accelerated rho = {rho} must lie in (0, {}]",
                    problem.rho()
                )));
            }
            require(StepsizeCheck::SatisfiedWithEquality)
        }
        StepSchedule::LinearRate(p) => {
            if !(problem.rho() > 0.0 && problem.chi() > 0.0) {
                return Err(SolverError::RegimeMismatch("linear-rate regime requires rho > 0 and chi > 0".into()));
            }
            let lower = 1.0 / (1.0 + p.alpha);
            if !(p.theta > lower && p.theta <= 1.0) {
                return Err(SolverError::ThetaOutOfRange { theta: p.theta, lower });
            }
            require(StepsizeCheck::SatisfiedWithEquality)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub tol: f64,
    pub max_iter: usize,
}

impl StopRule {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter }
    }
}

impl Default for StopRule {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ToleranceReached,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_x: Vec<f64>,
    pub final_u: Vec<f64>,
    /// `r_k` for every iteration; `+∞` where the previous iterate was zero.
    pub residuals: Vec<f64>,
    pub stop_reason: StopReason,
    /// Seconds.
    pub wall_time: f64,
}

impl SolveReport {
    /// Equality ignoring wall-clock time.
    pub fn same_trajectory(&self, other: &Self) -> bool {
        self.iterations == other.iterations
            && self.stop_reason == other.stop_reason
            && bits_eq(&self.final_x, &other.final_x)
            && bits_eq(&self.final_u, &other.final_u)
            && bits_eq(&self.residuals, &other.residuals)
    }
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Stepwise driver for the iteration, for callers that need to inspect
/// every iterate.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    problem: &'a InclusionProblem,
    schedule: StepSchedule,
    state: IterationState,
}

impl<'a> Solver<'a> {
    pub fn new(
        problem: &'a InclusionProblem,
        schedule: StepSchedule,
        x0: &[f64],
        u0: &[f64],
    ) -> Result<Self, SolverError> {
        check_regime(problem, &schedule)?;
        Ok(Self::new_unchecked(problem, schedule, x0, u0))
    }

    /// Skips the regime check; the step-size range check in [`step`] still
    /// applies.
    pub fn new_unchecked(problem: &'a InclusionProblem, schedule: StepSchedule, x0: &[f64], u0: &[f64]) -> Self {
        let state = IterationState::new(x0.to_vec(), u0.to_vec(), schedule.initial());
        Self { problem, schedule, state }
    }

    pub fn state(&self) -> &IterationState {
        &self.state
    }

    pub fn schedule(&self) -> &StepSchedule {
        &self.schedule
    }

    /// Advances one iteration and returns `r_k` for it.
    pub fn advance(&mut self) -> Result<f64, SolverError> {
        let mut next = step(self.problem, &self.state)?;
        let params = schedule_advance(&self.schedule, &next);
        next.tau = params.tau;
        next.gamma = params.gamma;
        next.theta = params.theta;
        let r = relative_error(&self.state.x, &self.state.u, &next.x, &next.u);
        self.state = next;
        Ok(r)
    }

    pub fn into_state(self) -> IterationState {
        self.state
    }
}

/// Runs the iteration from `(x⁰, u⁰)` until `r_k < tol` or `max_iter`.
pub fn solve(
    problem: &InclusionProblem,
    schedule: StepSchedule,
    x0: &[f64],
    u0: &[f64],
    stop: StopRule,
) -> Result<SolveReport, SolverError> {
    solve_with(problem, schedule, x0, u0, stop, |_, _| {})
}

/// [`solve`] with a callback receiving every new state and its `r_k`.
pub fn solve_with<F>(
    problem: &InclusionProblem,
    schedule: StepSchedule,
    x0: &[f64],
    u0: &[f64],
    stop: StopRule,
    mut observe: F,
) -> Result<SolveReport, SolverError>
where
    F: FnMut(&IterationState, f64),
{
    let start = Instant::now();
    let mut solver = Solver::new(problem, schedule, x0, u0)?;
    let mut residuals = Vec::new();
    let mut stop_reason = StopReason::MaxIterations;
    while residuals.len() < stop.max_iter {
        let r = solver.advance()?;
        residuals.push(r);
        observe(solver.state(), r);
        // r = +∞ means the previous iterate was zero: not measurable yet
        if r.is_finite() && r < stop.tol {
            stop_reason = StopReason::ToleranceReached;
            break;
        }
    }
    let state = solver.into_state();
    Ok(SolveReport {
        iterations: residuals.len(),
        final_x: state.x,
        final_u: state.u,
        residuals,
        stop_reason,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
