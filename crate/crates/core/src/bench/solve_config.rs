//! JSON description of a single composite problem for `ppds solve`.
//! The schema is documented in the README.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convex::{to_inclusion, CompositeProblem, ConvexError, DualTerm, SmoothTerm};
use crate::linalg::{spd_factor, DenseMatrix, JitterPolicy};
use crate::operators::{self, make_subspace_projector, FixedPointMap, LinearMap, SubspaceSpec};
use crate::solver::{
    self, half_inverse, linear_rate_params, InclusionProblem, SolveReport, SolverError, StepSchedule, StopReason,
    StopRule,
};

type BoxedProx = Box<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinearMapSpec {
    /// Rows as nested arrays.
    Matrix {
        data: DenseMatrix,
    },
    Identity {
        dim: usize,
    },
    Zero {
        in_dim: usize,
        out_dim: usize,
    },
}

/// `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrimalSpec {
    Zero,
    /// `w‖x‖₁`
    L1 {
        #[serde(default = "one")]
        weight: f64,
    },
    /// `(σ/2)‖x − a‖²`, `ρ = σ`
    Quadratic {
        a: Vec<f64>,
        sigma: f64,
    },
    /// `‖x‖₁ + (ρ/2)‖x − a‖²`
    L1Quadratic {
        a: Vec<f64>,
        rho: f64,
    },
}

/// `g`, or `g*` for the `conj_*` kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DualSpec {
    /// `g = ι_{b}`, i.e. the constraint `Lx = b`.
    Point { b: Vec<f64> },
    /// `g = 0`, so `g* = ι_{0}`.
    Zero,
    /// `g = w‖·‖₁`; `g*` is the indicator of the `ℓ∞` ball of radius `w`.
    L1 {
        #[serde(default = "one")]
        weight: f64,
    },
    /// `g = (σ/2)‖· − a‖²`, `χ = 1/σ`.
    Quadratic { a: Vec<f64>, sigma: f64 },
    /// `g* = ‖·‖₁ + (χ/2)‖· − a‖²`.
    ConjL1Quadratic { a: Vec<f64>, chi: f64 },
}

/// `h` or `ℓ*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothSpec {
    /// `(σ/2)‖· − a‖²`; gradient cocoercive with modulus `1/σ`.
    Quadratic { a: Vec<f64>, sigma: f64 },
}

/// `X = Fix T`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum XSetSpec {
    #[default]
    Full,
    /// `{x : Rx = c}`
    Affine { r: DenseMatrix, c: Vec<f64> },
}

/// `V`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubspaceSetSpec {
    #[default]
    Full,
    /// Columns form an orthonormal basis.
    Basis { basis: DenseMatrix },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Static {
        tau: f64,
        gamma: f64,
        #[serde(default = "one")]
        theta: f64,
    },
    /// `τ` chosen so that `(1/τ − 1/(2β))(1/γ − 1/(2δ)) = ‖L‖²/safety`.
    StaticAuto {
        gamma: f64,
        #[serde(default = "default_safety")]
        safety: f64,
        #[serde(default = "one")]
        theta: f64,
    },
    Accelerated {
        tau0: f64,
    },
    LinearRate {
        #[serde(default = "one")]
        theta: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_safety() -> f64 {
    0.99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub l: LinearMapSpec,
    pub f: PrimalSpec,
    pub g: DualSpec,
    #[serde(default)]
    pub h: Option<SmoothSpec>,
    #[serde(default)]
    pub lstar: Option<SmoothSpec>,
    #[serde(default)]
    pub x_set: XSetSpec,
    #[serde(default)]
    pub v_set: SubspaceSetSpec,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub stop: StopRule,
    /// Defaults to zero.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub u0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveConfigError {
    #[error("config error: {0}")]
    Config(String),
    #[error("regime violation: {0}")]
    Regime(SolverError),
    #[error("solver failure: {0}")]
    Solver(SolverError),
}

impl SolveConfigError {
    fn from_solver(e: SolverError) -> Self {
        match e {
            SolverError::StepsizeOutOfRange { .. }
            | SolverError::StepsizeRegimeMismatch { .. }
            | SolverError::RegimeMismatch(_)
            | SolverError::ThetaOutOfRange { .. } => SolveConfigError::Regime(e),
            SolverError::DimensionMismatch { .. } | SolverError::RangeNotInSubspace(_) | SolverError::Operator(_) => {
                SolveConfigError::Config(e.to_string())
            }
            SolverError::NonFiniteIterate { .. } => SolveConfigError::Solver(e),
        }
    }
}

impl From<ConvexError> for SolveConfigError {
    fn from(e: ConvexError) -> Self {
        match e {
            ConvexError::Solver(s) => Self::from_solver(s),
            other => SolveConfigError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub schedule: StepSchedule,
    pub l_norm: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub final_residual: f64,
    pub wall_time_s: f64,
    pub final_x: Vec<f64>,
    pub final_u: Vec<f64>,
}

impl SolveOutcome {
    fn new(schedule: StepSchedule, l_norm: f64, rep: SolveReport) -> Self {
        Self {
            schedule,
            l_norm,
            iterations: rep.iterations,
            stop_reason: rep.stop_reason,
            final_residual: rep.residuals.last().copied().unwrap_or(f64::INFINITY),
            wall_time_s: rep.wall_time,
            final_x: rep.final_x,
            final_u: rep.final_u,
        }
    }
}

impl SolveConfig {
    pub fn from_json(text: &str) -> Result<Self, SolveConfigError> {
        serde_json::from_str(text).map_err(|e| SolveConfigError::Config(e.to_string()))
    }
}

fn config_err(msg: impl Into<String>) -> SolveConfigError {
    SolveConfigError::Config(msg.into())
}

fn check_len(what: &str, v: &[f64], expected: usize) -> Result<(), SolveConfigError> {
    if v.len() != expected {
        return Err(config_err(format!("{what}: expected length {expected}, found {}", v.len())));
    }
    Ok(())
}

fn positive(what: &str, v: f64) -> Result<f64, SolveConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("{what} must be positive and finite, got {v}")))
    }
}

fn build_l(spec: &LinearMapSpec) -> Result<LinearMap, SolveConfigError> {
    Ok(match spec {
        LinearMapSpec::Matrix { data } => {
            LinearMap::from_matrix(data.clone()).map_err(|e| config_err(e.to_string()))?
        }
        LinearMapSpec::Identity { dim } => LinearMap::identity(*dim),
        LinearMapSpec::Zero { in_dim, out_dim } => LinearMap::zero(*in_dim, *out_dim),
    })
}

fn build_smooth(spec: &Option<SmoothSpec>, dim: usize, what: &str) -> Result<Option<SmoothTerm>, SolveConfigError> {
    let Some(SmoothSpec::Quadratic { a, sigma }) = spec else {
        return Ok(None);
    };
    check_len(what, a, dim)?;
    let sigma = positive(what, *sigma)?;
    let a = a.clone();
    Ok(Some(SmoothTerm::new(1.0 / sigma, move |x: &[f64]| {
        x.iter().zip(&a).map(|(xi, ai)| sigma * (xi - ai)).collect()
    })))
}

impl SolveConfig {
    /// Assembled operator problem.
    pub fn build_problem(&self) -> Result<InclusionProblem, SolveConfigError> {
        let l = build_l(&self.l)?;
        let (n, m) = (l.in_dim(), l.out_dim());

        let (rho, prox_f): (f64, BoxedProx) = match &self.f {
            PrimalSpec::Zero => (0.0, Box::new(|x: &[f64], _| x.to_vec())),
            PrimalSpec::L1 { weight } => {
                let w = positive("f weight", *weight)?;
                (0.0, Box::new(move |x: &[f64], t| operators::soft_threshold(x, w * t)))
            }
            PrimalSpec::Quadratic { a, sigma } => {
                check_len("f.a", a, n)?;
                let (a, s) = (a.clone(), positive("f sigma", *sigma)?);
                (s, Box::new(move |x: &[f64], t| operators::prox_scaled_quadratic(&a, s, t, x)))
            }
            PrimalSpec::L1Quadratic { a, rho } => {
                check_len("f.a", a, n)?;
                let (a, r) = (a.clone(), positive("f rho", *rho)?);
                (r, Box::new(move |x: &[f64], t| operators::prox_l1_plus_quadratic(&a, r, t, x)))
            }
        };

        let (chi, g) = match &self.g {
            DualSpec::Point { b } => {
                check_len("g.b", b, m)?;
                (0.0, DualTerm::PointIndicator(b.clone()))
            }
            DualSpec::Zero => (0.0, DualTerm::ConjugateProx(std::sync::Arc::new(|u: &[f64], _| vec![0.0; u.len()]))),
            DualSpec::L1 { weight } => {
                let w = positive("g weight", *weight)?;
                let clip = move |u: &[f64], _| u.iter().map(|v| v.clamp(-w, w)).collect();
                (0.0, DualTerm::ConjugateProx(std::sync::Arc::new(clip)))
            }
            DualSpec::Quadratic { a, sigma } => {
                check_len("g.a", a, m)?;
                let (a, s) = (a.clone(), positive("g sigma", *sigma)?);
                (
                    1.0 / s,
                    DualTerm::Prox(std::sync::Arc::new(move |x: &[f64], t| {
                        operators::prox_scaled_quadratic(&a, s, t, x)
                    })),
                )
            }
            DualSpec::ConjL1Quadratic { a, chi } => {
                check_len("g.a", a, m)?;
                let (a, c) = (a.clone(), positive("g chi", *chi)?);
                (
                    c,
                    DualTerm::ConjugateProx(std::sync::Arc::new(move |x: &[f64], t| {
                        operators::prox_l1_plus_quadratic(&a, c, t, x)
                    })),
                )
            }
        };

        let mut p = CompositeProblem::new(l, rho, move |x, t| prox_f(x, t), g, chi);
        p.grad_h = build_smooth(&self.h, n, "h")?;
        p.grad_lstar = build_smooth(&self.lstar, m, "lstar")?;
        p.x_proj = match &self.x_set {
            XSetSpec::Full => FixedPointMap::identity(),
            XSetSpec::Affine { r, c } => {
                if r.cols() != n {
                    return Err(config_err(format!("x_set.r: expected {n} columns, found {}", r.cols())));
                }
                let gram = r.gram_rows();
                let factor =
                    spd_factor(&gram, JitterPolicy::default_for(&gram)).map_err(|e| config_err(e.to_string()))?;
                operators::make_affine_projector(r.clone(), c.clone(), factor).map_err(|e| config_err(e.to_string()))?
            }
        };
        p.v_proj = match &self.v_set {
            SubspaceSetSpec::Full => FixedPointMap::identity(),
            SubspaceSetSpec::Basis { basis } => {
                if basis.rows() != m {
                    return Err(config_err(format!("v_set.basis: expected {m} rows, found {}", basis.rows())));
                }
                make_subspace_projector(SubspaceSpec::OrthonormalBasis(basis.clone()))
                    .map_err(|e| config_err(e.to_string()))?
            }
        };
        Ok(to_inclusion(&p)?)
    }

    pub fn build_schedule(&self, problem: &InclusionProblem) -> Result<StepSchedule, SolveConfigError> {
        let l_norm = problem.l().norm_bound();
        match self.schedule {
            ScheduleSpec::Static { tau, gamma, theta } => Ok(StepSchedule::Static { tau, gamma, theta }),
            ScheduleSpec::StaticAuto { gamma, safety, theta } => {
                let safety = positive("safety", safety)?;
                let dual = 1.0 / positive("gamma", gamma)? - half_inverse(problem.delta());
                if !(dual > 0.0) {
                    return Err(SolveConfigError::Regime(SolverError::StepsizeOutOfRange { tau: f64::NAN, gamma }));
                }
                let tau = 1.0 / (l_norm * l_norm / (safety * dual) + half_inverse(problem.beta()));
                Ok(StepSchedule::Static { tau, gamma, theta })
            }
            ScheduleSpec::Accelerated { tau0 } => {
                StepSchedule::accelerated_for(problem, tau0).map_err(SolveConfigError::from_solver)
            }
            ScheduleSpec::LinearRate { theta } => {
                linear_rate_params(problem.rho(), problem.chi(), problem.beta(), problem.delta(), l_norm, theta)
                    .map(StepSchedule::LinearRate)
                    .map_err(SolveConfigError::from_solver)
            }
        }
    }
}

/// Builds and solves the configured problem.
pub fn run_solve_config(cfg: &SolveConfig) -> Result<SolveOutcome, SolveConfigError> {
    let problem = cfg.build_problem()?;
    let schedule = cfg.build_schedule(&problem)?;
    if !(cfg.stop.tol > 0.0) || cfg.stop.max_iter == 0 {
        return Err(config_err("stop: tol must be positive and max_iter at least 1"));
    }
    let x0 = cfg.x0.clone().unwrap_or_else(|| vec![0.0; problem.primal_dim()]);
    let u0 = cfg.u0.clone().unwrap_or_else(|| vec![0.0; problem.dual_dim()]);
    check_len("x0", &x0, problem.primal_dim())?;
    check_len("u0", &u0, problem.dual_dim())?;
    let rep = solver::solve(&problem, schedule, &x0, &u0, cfg.stop).map_err(SolveConfigError::from_solver)?;
    Ok(SolveOutcome::new(schedule, problem.l().norm_bound(), rep))
}
