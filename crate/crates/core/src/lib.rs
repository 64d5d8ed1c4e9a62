//! Projected primal-dual splitting for monotone inclusions whose primal and
//! dual solutions are known to lie in given sets.
//!
//! * [`linalg`]: dense matrices, Cholesky with jitter, power-iteration norms.
//! * [`operators`]: resolvents, cocoercive maps, linear maps, projectors.
//! * [`solver`]: the iteration, its step-size regimes and diagnostics.
//! * [`convex`]: composite convex problems and the constrained ℓ1 model.
//! * [`bench`]: random experiments, region grids, JSON-configured solves.

pub mod bench;
pub mod convex;
pub mod linalg;
pub mod operators;
pub mod par;
pub mod solver;
