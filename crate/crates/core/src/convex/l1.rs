//! `min ‖x‖₁ s.t. Rx = c, Sx = d`, solved either with the projected method
//! (PCP: primal iterates projected onto one block of constraints) or with the
//! unprojected baseline (CP: constraints enforced only through the multiplier).

use crate::linalg::{self, spd_factor, DenseMatrix, JitterPolicy};
use crate::operators::{self, FixedPointMap, LinearMap};
use crate::solver::{self, InclusionProblem, SolveReport, StepSchedule, StopRule};

use super::{to_inclusion, CompositeProblem, ConvexError, DualTerm};

/// Instance of the equality-constrained ℓ1 problem; `L = (R; S)`, `b = (c; d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualityConstrainedL1 {
    pub r: DenseMatrix,
    pub s: DenseMatrix,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

/// Which constraint block the primal iterates are projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionBlock {
    #[default]
    R,
    S,
}

impl EqualityConstrainedL1 {
    pub fn new(r: DenseMatrix, s: DenseMatrix, c: Vec<f64>, d: Vec<f64>) -> Result<Self, ConvexError> {
        let inst = Self { r, s, c, d };
        inst.check_dims()?;
        Ok(inst)
    }

    fn check_dims(&self) -> Result<(), ConvexError> {
        let n = self.dim();
        let mismatch = |what, expected, found| Err(ConvexError::DimensionMismatch { what, expected, found });
        if self.r.rows() > 0 && self.r.cols() != n {
            return mismatch("R columns", n, self.r.cols());
        }
        if self.s.rows() > 0 && self.s.cols() != n {
            return mismatch("S columns", n, self.s.cols());
        }
        if self.c.len() != self.r.rows() {
            return mismatch("c", self.r.rows(), self.c.len());
        }
        if self.d.len() != self.s.rows() {
            return mismatch("d", self.s.rows(), self.d.len());
        }
        Ok(())
    }

    /// Number of unknowns `N`.
    pub fn dim(&self) -> usize {
        if self.r.rows() > 0 {
            self.r.cols()
        } else {
            self.s.cols()
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.r.rows() + self.s.rows()
    }

    /// `(L, b)` with `L = (R; S)` and `b = (c; d)`.
    pub fn stacked(&self) -> Result<(DenseMatrix, Vec<f64>), ConvexError> {
        let l = self.r.vstack(&self.s)?;
        let mut b = self.c.clone();
        b.extend_from_slice(&self.d);
        Ok((l, b))
    }

    /// `‖L x_ls − b‖` for the minimum-norm least-squares solution `x_ls`.
    pub fn consistency_residual(&self) -> Result<f64, ConvexError> {
        let (l, b) = self.stacked()?;
        let gram = l.gram_rows();
        let factor = spd_factor(&gram, JitterPolicy::default_for(&gram))?;
        let y = linalg::spd_solve(&factor, &b)?;
        let x = linalg::adjoint_matvec(&l, &y)?;
        let lx = linalg::matvec(&l, &x)?;
        Ok(linalg::norm(&linalg::sub(&lx, &b)))
    }

    /// `‖R x − c‖∞`
    pub fn r_violation(&self, x: &[f64]) -> f64 {
        if self.r.rows() == 0 {
            return 0.0;
        }
        let rx = linalg::matvec(&self.r, x).expect("dimension checked at construction");
        rx.iter().zip(&self.c).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Shared data of the PCP and CP formulations of one instance: the stacked
/// operator, its norm, the affine projector and the step sizes
/// `τ = 0.99/(γ‖L‖²)`.
#[derive(Debug, Clone)]
pub struct L1Setup {
    l: LinearMap,
    b: Vec<f64>,
    projector: FixedPointMap,
    gamma: f64,
    tau: f64,
}

fn affine_projector(m: &DenseMatrix, rhs: &[f64]) -> Result<FixedPointMap, ConvexError> {
    if m.rows() == 0 {
        return Ok(FixedPointMap::identity());
    }
    let gram = m.gram_rows();
    let factor = spd_factor(&gram, JitterPolicy::default_for(&gram))?;
    Ok(operators::make_affine_projector(m.clone(), rhs.to_vec(), factor)?)
}

impl L1Setup {
    pub fn new(inst: &EqualityConstrainedL1, gamma: f64, block: ProjectionBlock) -> Result<Self, ConvexError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ConvexError::InvalidStep(gamma));
        }
        inst.check_dims()?;
        let (lm, b) = inst.stacked()?;
        let norm = linalg::operator_norm_default(&lm)?;
        if norm == 0.0 {
            return Err(ConvexError::InvalidModulus { what: "norm of L", value: 0.0 });
        }
        let projector = match block {
            ProjectionBlock::R => affine_projector(&inst.r, &inst.c)?,
            ProjectionBlock::S => affine_projector(&inst.s, &inst.d)?,
        };
        let tau = 0.99 / (gamma * norm * norm);
        Ok(Self { l: LinearMap::from_matrix_with_norm(lm, norm), b, projector, gamma, tau })
    }

    pub fn l_norm(&self) -> f64 {
        self.l.norm_bound()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn primal_dim(&self) -> usize {
        self.l.in_dim()
    }

    pub fn dual_dim(&self) -> usize {
        self.l.out_dim()
    }

    /// `θ = 1`, constant steps.
    pub fn schedule(&self) -> StepSchedule {
        StepSchedule::Static { tau: self.tau, gamma: self.gamma, theta: 1.0 }
    }

    fn composite(&self, x_proj: FixedPointMap) -> CompositeProblem {
        let mut p = CompositeProblem::new(
            self.l.clone(),
            0.0,
            |x: &[f64], t: f64| operators::soft_threshold(x, t),
            DualTerm::PointIndicator(self.b.clone()),
            0.0,
        );
        p.x_proj = x_proj;
        p
    }

    pub fn pcp_problem(&self) -> Result<InclusionProblem, ConvexError> {
        to_inclusion(&self.composite(self.projector.clone()))
    }

    pub fn cp_problem(&self) -> Result<InclusionProblem, ConvexError> {
        to_inclusion(&self.composite(FixedPointMap::identity()))
    }

    fn run(&self, problem: &InclusionProblem, stop: StopRule) -> Result<SolveReport, ConvexError> {
        let x0 = vec![0.0; self.primal_dim()];
        let u0 = vec![0.0; self.dual_dim()];
        Ok(solver::solve(problem, self.schedule(), &x0, &u0, stop)?)
    }

    pub fn pcp_solve(&self, stop: StopRule) -> Result<SolveReport, ConvexError> {
        self.run(&self.pcp_problem()?, stop)
    }

    pub fn cp_solve(&self, stop: StopRule) -> Result<SolveReport, ConvexError> {
        self.run(&self.cp_problem()?, stop)
    }
}

/// PCP formulation projecting onto `{Rx = c}`.
pub fn pcp_build(inst: &EqualityConstrainedL1, gamma: f64) -> Result<(InclusionProblem, StepSchedule), ConvexError> {
    pcp_build_with(inst, gamma, ProjectionBlock::R)
}

pub fn pcp_build_with(
    inst: &EqualityConstrainedL1,
    gamma: f64,
    block: ProjectionBlock,
) -> Result<(InclusionProblem, StepSchedule), ConvexError> {
    let setup = L1Setup::new(inst, gamma, block)?;
    Ok((setup.pcp_problem()?, setup.schedule()))
}

/// CP baseline formulation (`T = P_V = Id`).
pub fn cp_build(inst: &EqualityConstrainedL1, gamma: f64) -> Result<(InclusionProblem, StepSchedule), ConvexError> {
    let setup = L1Setup::new(inst, gamma, ProjectionBlock::R)?;
    Ok((setup.cp_problem()?, setup.schedule()))
}

/// Runs CP from `(x⁰, u⁰) = (0, 0)`.
pub fn cp_solve(inst: &EqualityConstrainedL1, gamma: f64, stop: StopRule) -> Result<SolveReport, ConvexError> {
    L1Setup::new(inst, gamma, ProjectionBlock::R)?.cp_solve(stop)
}

/// Runs PCP from `(x⁰, u⁰) = (0, 0)`.
pub fn pcp_solve(inst: &EqualityConstrainedL1, gamma: f64, stop: StopRule) -> Result<SolveReport, ConvexError> {
    L1Setup::new(inst, gamma, ProjectionBlock::R)?.pcp_solve(stop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{check_regime, validate_stepsizes, StepsizeCheck};

    fn line_instance() -> EqualityConstrainedL1 {
        let r = DenseMatrix::from_rows(&[[1.0, -1.0]]).unwrap();
        EqualityConstrainedL1::new(r, DenseMatrix::zeros(0, 2), vec![2.0], vec![]).unwrap()
    }

    #[test]
    fn dims_are_checked() {
        let r = DenseMatrix::from_rows(&[[1.0, -1.0]]).unwrap();
        assert!(EqualityConstrainedL1::new(r.clone(), DenseMatrix::zeros(0, 2), vec![2.0, 1.0], vec![]).is_err());
        let s = DenseMatrix::from_rows(&[[1.0, 0.0, 1.0]]).unwrap();
        assert!(EqualityConstrainedL1::new(r, s, vec![2.0], vec![1.0]).is_err());
    }

    #[test]
    fn stepsizes_strict_by_construction() {
        let inst = line_instance();
        let setup = L1Setup::new(&inst, 0.01, ProjectionBlock::R).unwrap();
        assert!((setup.tau() * setup.gamma() * setup.l_norm().powi(2) - 0.99).abs() < 1e-14);
        assert_eq!(
            validate_stepsizes(setup.tau(), setup.gamma(), f64::INFINITY, f64::INFINITY, setup.l_norm()),
            StepsizeCheck::StrictlySatisfied
        );
        let (p, s) = pcp_build(&inst, 0.01).unwrap();
        assert!(check_regime(&p, &s).is_ok());
        assert!(L1Setup::new(&inst, 0.0, ProjectionBlock::R).is_err());
    }

    #[test]
    fn pcp_iterates_stay_on_the_line() {
        let inst = line_instance();
        let (p, s) = pcp_build(&inst, 0.5).unwrap();
        let mut worst: f64 = 0.0;
        let rep = solver::solve_with(&p, s, &[0.0; 2], &[0.0], StopRule::new(1e-10, 10_000), |st, _| {
            worst = worst.max((st.x[0] - st.x[1] - 2.0).abs());
        })
        .unwrap();
        assert!(worst <= 1e-10, "worst violation {worst}");
        // min |x₁| + |x₂| on x₁ − x₂ = 2 is attained on the segment [0,2]×[−2,0]
        let x = &rep.final_x;
        assert!((x[0].abs() + x[1].abs() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn consistency_residual_of_consistent_instance() {
        let inst = line_instance();
        assert!(inst.consistency_residual().unwrap() < 1e-12);
        assert_eq!(inst.r_violation(&[2.0, 0.0]), 0.0);
    }
}
