//! Convex-optimization front-end.
//!
//! A composite problem `min f(x) + (g □ ℓ)(Lx) + h(x)` over `x ∈ Fix T`, with
//! a dual constrained to `V`, is turned into an [`InclusionProblem`] with
//! `A = ∂f`, `B = ∂g`, `C = ∇h`, `D = ∂ℓ`. The iteration then reads
//!
//! ```text
//! η⁺ = prox_{γg*}(u + γ(L x̄ − ∇ℓ*(u)))
//! p⁺ = prox_{τf}(x − τ(L*u⁺ + ∇h(x)))
//! ```
//!
//! The qualification condition `0 ∈ sri(L(dom f) − b)` cannot be checked from
//! black-box proximity operators; it is the caller's obligation.

mod l1;
mod oracle;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::operators::{self, CocoerciveOp, FixedPointMap, LinearMap, MonotoneOp, OperatorError, ResolventFn, VecMap};
use crate::solver::{InclusionProblem, SolverError};

pub use l1::{
    cp_build, cp_solve, pcp_build, pcp_build_with, pcp_solve, EqualityConstrainedL1, L1Setup, ProjectionBlock,
};
pub use oracle::{l1_lp_oracle, OracleError, ORACLE_MAX_CONSTRAINTS, ORACLE_MAX_DIM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvexError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("invalid modulus for {what}: {value}")]
    InvalidModulus { what: &'static str, value: f64 },
    #[error("constraints are inconsistent (least-squares residual {0:e})")]
    Inconsistent(f64),
    #[error("step size must be positive, got {0}")]
    InvalidStep(f64),
}

/// How the dual function `g` is supplied.
#[derive(Clone)]
pub enum DualTerm {
    /// `prox_g(point, step)`; converted through the Moreau identity.
    Prox(ResolventFn),
    /// `prox_{g*}(point, step)` directly.
    ConjugateProx(ResolventFn),
    /// `g = ι_{b}`, with `prox_{γg*} = Id − γb`.
    PointIndicator(Vec<f64>),
}

impl fmt::Debug for DualTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualTerm::Prox(_) => f.write_str("Prox(..)"),
            DualTerm::ConjugateProx(_) => f.write_str("ConjugateProx(..)"),
            DualTerm::PointIndicator(b) => f.debug_tuple("PointIndicator").field(b).finish(),
        }
    }
}

/// Gradient of a smooth term with its cocoercivity modulus (`β` for `∇h`,
/// `δ` for `∇ℓ*`).
#[derive(Clone)]
pub struct SmoothTerm {
    pub grad: VecMap,
    pub modulus: f64,
}

impl SmoothTerm {
    pub fn new<F>(modulus: f64, grad: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { grad: Arc::new(grad), modulus }
    }
}

impl fmt::Debug for SmoothTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothTerm").field("modulus", &self.modulus).finish()
    }
}

/// `min f(x) + (g □ ℓ)(Lx) + h(x)` with a priori sets `X = Fix T` and `V`.
///
/// `rho` is the strong-convexity modulus of `f`, `chi` that of `g*`.
#[derive(Clone)]
pub struct CompositeProblem {
    pub prox_f: ResolventFn,
    pub rho: f64,
    pub g: DualTerm,
    pub chi: f64,
    /// `∇h`; `None` means `h = 0`.
    pub grad_h: Option<SmoothTerm>,
    /// `∇ℓ*`; `None` means `ℓ* = 0`.
    pub grad_lstar: Option<SmoothTerm>,
    pub l: LinearMap,
    pub x_proj: FixedPointMap,
    pub v_proj: FixedPointMap,
}

impl CompositeProblem {
    /// `f`, `g*` given, no smooth terms, no a priori sets.
    pub fn new<F>(l: LinearMap, rho: f64, prox_f: F, g: DualTerm, chi: f64) -> Self
    where
        F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            prox_f: Arc::new(prox_f),
            rho,
            g,
            chi,
            grad_h: None,
            grad_lstar: None,
            l,
            x_proj: FixedPointMap::identity(),
            v_proj: FixedPointMap::identity(),
        }
    }
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("rho", &self.rho)
            .field("g", &self.g)
            .field("chi", &self.chi)
            .field("grad_h", &self.grad_h)
            .field("grad_lstar", &self.grad_lstar)
            .field("l", &self.l)
            .finish()
    }
}

fn modulus_ok(what: &'static str, value: f64, positive: bool) -> Result<(), ConvexError> {
    let ok = if positive { value > 0.0 } else { value >= 0.0 && value.is_finite() };
    if ok {
        Ok(())
    } else {
        Err(ConvexError::InvalidModulus { what, value })
    }
}

/// Maps the composite problem onto the operator form.
pub fn to_inclusion(p: &CompositeProblem) -> Result<InclusionProblem, ConvexError> {
    modulus_ok("rho", p.rho, false)?;
    modulus_ok("chi", p.chi, false)?;

    let prox_f = p.prox_f.clone();
    let a = MonotoneOp::new(p.rho, move |x, t| prox_f(x, t));

    let b_inv = match &p.g {
        DualTerm::Prox(prox_g) => {
            let prox_g = prox_g.clone();
            MonotoneOp::new(p.chi, move |x, gamma| operators::prox_conjugate(|y: &[f64], s| prox_g(y, s), gamma, x))
        }
        DualTerm::ConjugateProx(prox_gs) => {
            let prox_gs = prox_gs.clone();
            MonotoneOp::new(p.chi, move |x, gamma| prox_gs(x, gamma))
        }
        DualTerm::PointIndicator(b) => {
            if b.len() != p.l.out_dim() {
                return Err(ConvexError::DimensionMismatch { what: "b", expected: p.l.out_dim(), found: b.len() });
            }
            let b = b.clone();
            MonotoneOp::new(p.chi, move |u, gamma| u.iter().zip(&b).map(|(ui, bi)| ui - gamma * bi).collect())
        }
    };

    let smooth = |term: &Option<SmoothTerm>, what| -> Result<CocoerciveOp, ConvexError> {
        match term {
            None => Ok(CocoerciveOp::zero()),
            Some(s) => {
                modulus_ok(what, s.modulus, true)?;
                let g = s.grad.clone();
                Ok(CocoerciveOp::new(s.modulus, move |x| g(x)))
            }
        }
    };

    let problem = InclusionProblem::builder(p.l.clone())
        .a(a)
        .b_inv(b_inv)
        .c(smooth(&p.grad_h, "beta")?)
        .d_inv(smooth(&p.grad_lstar, "delta")?)
        .t(p.x_proj.clone())
        .pv(p.v_proj.clone())
        .build()?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::solver::{solve, step, IterationState, StepParams, StepSchedule, StopReason, StopRule};

    fn identity_prox() -> impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static {
        |x: &[f64], _t: f64| x.to_vec()
    }

    #[test]
    fn empty_problem_step_is_identity() {
        // f = 0 and g* = 0 (g = ι_{0}), L = 0
        let p = CompositeProblem::new(
            LinearMap::zero(3, 2),
            0.0,
            identity_prox(),
            DualTerm::PointIndicator(vec![0.0; 2]),
            0.0,
        );
        let inc = to_inclusion(&p).unwrap();
        let s =
            IterationState::new(vec![1.0, 2.0, 3.0], vec![-1.0, 0.5], StepParams { tau: 0.4, gamma: 0.9, theta: 1.0 });
        let n = step(&inc, &s).unwrap();
        assert_eq!(n.x, s.x);
        assert_eq!(n.u, s.u);
    }

    #[test]
    fn literal_zero_g_sends_dual_to_zero() {
        // g = 0 means g* = ι_{0}: prox_{γg*} ≡ 0
        let p = CompositeProblem::new(
            LinearMap::zero(2, 2),
            0.0,
            identity_prox(),
            DualTerm::Prox(Arc::new(identity_prox())),
            0.0,
        );
        let inc = to_inclusion(&p).unwrap();
        let s = IterationState::new(vec![1.0, 2.0], vec![-1.0, 0.5], StepParams { tau: 0.4, gamma: 0.9, theta: 1.0 });
        let n = step(&inc, &s).unwrap();
        assert_eq!(n.x, s.x);
        assert!(n.u.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn moduli_are_preserved() {
        let mut p = CompositeProblem::new(
            LinearMap::identity(2),
            0.7,
            identity_prox(),
            DualTerm::PointIndicator(vec![0.0; 2]),
            0.3,
        );
        p.grad_h = Some(SmoothTerm::new(2.0, |x: &[f64]| x.iter().map(|v| v / 2.0).collect()));
        p.grad_lstar = Some(SmoothTerm::new(5.0, |u: &[f64]| u.iter().map(|v| v / 5.0).collect()));
        let inc = to_inclusion(&p).unwrap();
        assert_eq!((inc.rho(), inc.chi(), inc.beta(), inc.delta()), (0.7, 0.3, 2.0, 5.0));
        let q = CompositeProblem::new(
            LinearMap::identity(2),
            0.0,
            identity_prox(),
            DualTerm::PointIndicator(vec![0.0; 2]),
            0.0,
        );
        let inc = to_inclusion(&q).unwrap();
        assert!(inc.beta().is_infinite() && inc.delta().is_infinite());
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = CompositeProblem::new(
            LinearMap::identity(2),
            -1.0,
            identity_prox(),
            DualTerm::PointIndicator(vec![0.0; 2]),
            0.0,
        );
        assert!(matches!(to_inclusion(&p), Err(ConvexError::InvalidModulus { what: "rho", .. })));
        let p = CompositeProblem::new(
            LinearMap::identity(2),
            0.0,
            identity_prox(),
            DualTerm::PointIndicator(vec![0.0; 3]),
            0.0,
        );
        assert!(matches!(to_inclusion(&p), Err(ConvexError::DimensionMismatch { .. })));
    }

    #[test]
    fn quadratic_with_zero_constraint_reaches_kkt_point() {
        // min ½‖x − a‖² s.t. x = 0: KKT gives x̂ = 0 and û = a
        let a = vec![1.5, -0.25, 2.0];
        let a2 = a.clone();
        let p = CompositeProblem::new(
            LinearMap::from_matrix(DenseMatrix::identity(3)).unwrap(),
            1.0,
            move |x, t| operators::prox_scaled_quadratic(&a2, 1.0, t, x),
            DualTerm::PointIndicator(vec![0.0; 3]),
            0.0,
        );
        let inc = to_inclusion(&p).unwrap();
        let rep = solve(
            &inc,
            StepSchedule::Static { tau: 0.9, gamma: 0.9, theta: 1.0 },
            &[0.0; 3],
            &[0.0; 3],
            StopRule::new(1e-14, 100_000),
        )
        .unwrap();
        assert_eq!(rep.stop_reason, StopReason::ToleranceReached);
        for i in 0..3 {
            assert!(rep.final_x[i].abs() < 1e-10);
            assert!((rep.final_u[i] - a[i]).abs() < 1e-10);
        }
    }
}
