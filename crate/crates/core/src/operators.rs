//! Operator classes consumed by the splitting iteration, represented by the
//! maps the iteration actually evaluates: resolvents of maximally monotone
//! operators, evaluations of cocoercive operators, a bounded linear map with
//! its adjoint, and averaged quasi-nonexpansive maps.
//!
//! Also home to the closed-form proximity operators used by the constrained
//! ℓ1 application and by the strongly convex test problems.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{self, DenseMatrix, LinalgError, SpdFactor};

/// `(point, step) ↦ J_{step·M}(point)`
pub type ResolventFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
/// Single-valued map on vectors.
pub type VecMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("basis columns are not orthonormal (max Gram deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("invalid modulus {0}")]
    InvalidModulus(f64),
}

fn check_dim(expected: usize, found: usize) -> Result<(), OperatorError> {
    if expected == found {
        Ok(())
    } else {
        Err(OperatorError::DimensionMismatch { expected, found })
    }
}

/// A maximally monotone operator, given by its resolvent, with strong
/// monotonicity modulus `ρ ≥ 0`.
#[derive(Clone)]
pub struct MonotoneOp {
    resolvent: Option<ResolventFn>,
    strong_modulus: f64,
}

impl MonotoneOp {
    pub fn new<F>(strong_modulus: f64, resolvent: F) -> Self
    where
        F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        assert!(strong_modulus >= 0.0 && strong_modulus.is_finite(), "strong modulus must be finite and >= 0");
        Self { resolvent: Some(Arc::new(resolvent)), strong_modulus }
    }

    /// The zero operator; its resolvent is the identity.
    pub fn zero() -> Self {
        Self { resolvent: None, strong_modulus: 0.0 }
    }

    pub fn resolvent(&self, x: &[f64], step: f64) -> Vec<f64> {
        match &self.resolvent {
            Some(f) => f(x, step),
            None => x.to_vec(),
        }
    }

    pub fn strong_modulus(&self) -> f64 {
        self.strong_modulus
    }
}

impl fmt::Debug for MonotoneOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneOp")
            .field("zero", &self.resolvent.is_none())
            .field("strong_modulus", &self.strong_modulus)
            .finish()
    }
}

/// A single-valued `β`-cocoercive operator. `β = +∞` encodes the zero
/// operator, which makes `1/(2β)` vanish in the step-size condition.
#[derive(Clone)]
pub struct CocoerciveOp {
    eval: Option<VecMap>,
    modulus: f64,
}

impl CocoerciveOp {
    pub fn new<F>(modulus: f64, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        assert!(modulus > 0.0, "cocoercivity modulus must be positive");
        Self { eval: Some(Arc::new(eval)), modulus }
    }

    pub fn zero() -> Self {
        Self { eval: None, modulus: f64::INFINITY }
    }

    pub fn is_zero(&self) -> bool {
        self.eval.is_none()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match &self.eval {
            Some(f) => f(x),
            None => vec![0.0; x.len()],
        }
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }
}

impl fmt::Debug for CocoerciveOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CocoerciveOp").field("zero", &self.eval.is_none()).field("modulus", &self.modulus).finish()
    }
}

#[derive(Clone)]
enum LinearRepr {
    Zero,
    Identity,
    Dense(Arc<DenseMatrix>),
    Custom { forward: VecMap, adjoint: VecMap },
}

/// Bounded linear map `H → G` with its adjoint and an upper bound on `‖L‖`.
#[derive(Clone)]
pub struct LinearMap {
    repr: LinearRepr,
    in_dim: usize,
    out_dim: usize,
    norm_bound: f64,
}

impl LinearMap {
    /// Wraps a dense matrix, estimating its norm by power iteration.
    pub fn from_matrix(m: DenseMatrix) -> Result<Self, OperatorError> {
        let norm = linalg::operator_norm_default(&m)?;
        Ok(Self::from_matrix_with_norm(m, norm))
    }

    pub fn from_matrix_with_norm(m: DenseMatrix, norm_bound: f64) -> Self {
        Self { in_dim: m.cols(), out_dim: m.rows(), norm_bound, repr: LinearRepr::Dense(Arc::new(m)) }
    }

    pub fn zero(in_dim: usize, out_dim: usize) -> Self {
        Self { repr: LinearRepr::Zero, in_dim, out_dim, norm_bound: 0.0 }
    }

    pub fn identity(n: usize) -> Self {
        Self { repr: LinearRepr::Identity, in_dim: n, out_dim: n, norm_bound: 1.0 }
    }

    /// Matrix-free map; `norm_bound` is trusted.
    pub fn custom<F, G>(in_dim: usize, out_dim: usize, norm_bound: f64, forward: F, adjoint: G) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            repr: LinearRepr::Custom { forward: Arc::new(forward), adjoint: Arc::new(adjoint) },
            in_dim,
            out_dim,
            norm_bound,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn matrix(&self) -> Option<&DenseMatrix> {
        match &self.repr {
            LinearRepr::Dense(m) => Some(m),
            _ => None,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        match &self.repr {
            LinearRepr::Zero => vec![0.0; self.out_dim],
            LinearRepr::Identity => x.to_vec(),
            LinearRepr::Dense(m) => {
                let mut out = vec![0.0; self.out_dim];
                m.mul_vec_into(x, &mut out);
                out
            }
            LinearRepr::Custom { forward, .. } => forward(x),
        }
    }

    pub fn apply_adjoint(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.out_dim);
        match &self.repr {
            LinearRepr::Zero => vec![0.0; self.in_dim],
            LinearRepr::Identity => u.to_vec(),
            LinearRepr::Dense(m) => {
                let mut out = vec![0.0; self.in_dim];
                m.mul_transpose_vec_into(u, &mut out);
                out
            }
            LinearRepr::Custom { adjoint, .. } => adjoint(u),
        }
    }
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.repr {
            LinearRepr::Zero => "zero",
            LinearRepr::Identity => "identity",
            LinearRepr::Dense(_) => "dense",
            LinearRepr::Custom { .. } => "custom",
        };
        f.debug_struct("LinearMap")
            .field("kind", &kind)
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .field("norm_bound", &self.norm_bound)
            .finish()
    }
}

/// An `α`-averaged quasi-nonexpansive map.
///
/// `known_fixed_point` exists only so tests can check the averagedness
/// inequality; the solver never reads it.
#[derive(Clone)]
pub struct FixedPointMap {
    apply: Option<VecMap>,
    averagedness: f64,
    projector: bool,
    known_fixed_point: Option<Vec<f64>>,
}

impl FixedPointMap {
    pub fn identity() -> Self {
        Self { apply: None, averagedness: 0.5, projector: true, known_fixed_point: None }
    }

    /// User-supplied map. Its averagedness is trusted, not verified.
    pub fn new<F>(averagedness: f64, apply: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        assert!(averagedness > 0.0 && averagedness < 1.0, "averagedness must lie in (0,1)");
        Self { apply: Some(Arc::new(apply)), averagedness, projector: false, known_fixed_point: None }
    }

    fn projector<F>(apply: F, fixed_point: Option<Vec<f64>>) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { apply: Some(Arc::new(apply)), averagedness: 0.5, projector: true, known_fixed_point: fixed_point }
    }

    pub fn with_known_fixed_point(mut self, y: Vec<f64>) -> Self {
        self.known_fixed_point = Some(y);
        self
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.apply {
            Some(f) => f(x),
            None => x.to_vec(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.apply.is_none()
    }

    pub fn is_projector(&self) -> bool {
        self.projector
    }

    pub fn averagedness(&self) -> f64 {
        self.averagedness
    }

    pub fn known_fixed_point(&self) -> Option<&[f64]> {
        self.known_fixed_point.as_deref()
    }
}

impl fmt::Debug for FixedPointMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FixedPointMap")
            .field("identity", &self.apply.is_none())
            .field("projector", &self.projector)
            .field("averagedness", &self.averagedness)
            .finish()
    }
}

/// Proximity operator of `t‖·‖₁`: componentwise `sign(x)·max(|x| − t, 0)`.
pub fn soft_threshold(x: &[f64], t: f64) -> Vec<f64> {
    debug_assert!(t >= 0.0);
    x.iter().map(|&v| shrink(v, t)).collect()
}

#[inline]
fn shrink(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `prox_{γg*}(x) = x − γ·prox_{g/γ}(x/γ)`, given `prox_g(point, step)`.
pub fn prox_conjugate<F>(prox_g: F, gamma: f64, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64], f64) -> Vec<f64>,
{
    let scaled: Vec<f64> = x.iter().map(|v| v / gamma).collect();
    let p = prox_g(&scaled, 1.0 / gamma);
    x.iter().zip(&p).map(|(xi, pi)| xi - gamma * pi).collect()
}

/// `prox_{γι*_{b}}(u) = u − γb`.
pub fn point_indicator_conj_prox(b: &[f64], gamma: f64, u: &[f64]) -> Result<Vec<f64>, OperatorError> {
    check_dim(b.len(), u.len())?;
    Ok(u.iter().zip(b).map(|(ui, bi)| ui - gamma * bi).collect())
}

/// Proximity operator of `t·(σ/2)‖· − a‖²`.
pub fn prox_scaled_quadratic(a: &[f64], sigma: f64, t: f64, x: &[f64]) -> Vec<f64> {
    let ts = t * sigma;
    x.iter().zip(a).map(|(xi, ai)| (xi + ts * ai) / (1.0 + ts)).collect()
}

/// Proximity operator of `t·(‖·‖₁ + (ρ/2)‖· − a‖²)`:
/// `soft_threshold((x + tρa)/(1 + tρ), t/(1 + tρ))`.
pub fn prox_l1_plus_quadratic(a: &[f64], rho: f64, t: f64, x: &[f64]) -> Vec<f64> {
    let s = 1.0 + t * rho;
    x.iter().zip(a).map(|(xi, ai)| shrink((xi + t * rho * ai) / s, t / s)).collect()
}

/// Projector onto `{x : Rx = c}`, `x ↦ x − Rᵀ(RRᵀ)⁻¹(Rx − c)`, where
/// `factor` factors `RRᵀ`.
pub fn make_affine_projector(r: DenseMatrix, c: Vec<f64>, factor: SpdFactor) -> Result<FixedPointMap, OperatorError> {
    check_dim(r.rows(), c.len())?;
    check_dim(r.rows(), factor.dim())?;
    let x0 = linalg::adjoint_matvec(&r, &linalg::spd_solve(&factor, &c)?)?;
    let r = Arc::new(r);
    let apply = move |x: &[f64]| {
        let mut resid = vec![0.0; r.rows()];
        r.mul_vec_into(x, &mut resid);
        for (ri, ci) in resid.iter_mut().zip(&c) {
            *ri -= ci;
        }
        factor.solve_in_place(&mut resid);
        let mut out = x.to_vec();
        for (i, &w) in resid.iter().enumerate() {
            linalg::axpy(-w, r.row(i), &mut out);
        }
        out
    };
    Ok(FixedPointMap::projector(apply, Some(x0)))
}

/// Description of a closed subspace `V` for [`make_subspace_projector`].
#[derive(Debug, Clone)]
pub enum SubspaceSpec {
    FullSpace,
    /// Columns of the matrix form an orthonormal basis of `V`.
    OrthonormalBasis(DenseMatrix),
}

pub fn make_subspace_projector(spec: SubspaceSpec) -> Result<FixedPointMap, OperatorError> {
    match spec {
        SubspaceSpec::FullSpace => Ok(FixedPointMap::identity()),
        SubspaceSpec::OrthonormalBasis(q) => {
            let qt = q.transpose();
            let gram = qt.gram_rows();
            let k = gram.rows();
            let mut dev: f64 = 0.0;
            for i in 0..k {
                for j in 0..k {
                    let target = if i == j { 1.0 } else { 0.0 };
                    dev = dev.max((gram.get(i, j) - target).abs());
                }
            }
            if dev > 1e-10 {
                return Err(OperatorError::NotOrthonormal(dev));
            }
            let zero = vec![0.0; q.rows()];
            let apply = move |x: &[f64]| {
                let mut coeff = vec![0.0; qt.rows()];
                qt.mul_vec_into(x, &mut coeff);
                let mut out = vec![0.0; qt.cols()];
                qt.mul_transpose_vec_into(&coeff, &mut out);
                out
            };
            Ok(FixedPointMap::projector(apply, Some(zero)))
        }
    }
}
