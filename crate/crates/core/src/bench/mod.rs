//! Random equality-constrained ℓ1 experiments comparing PCP against CP, and
//! the step-size region grids.

mod report;
mod solve_config;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convex::{ConvexError, EqualityConstrainedL1, L1Setup, ProjectionBlock};
use crate::linalg::{self, DenseMatrix};
use crate::par::{map_indexed, Execution};
use crate::solver::{stepsize_region_membership, InclusionProblem, Solver, SolverError, StepSchedule};

pub use report::{grid_to_csv, to_csv, to_markdown, CsvOptions};
pub use solve_config::{
    run_solve_config, DualSpec, LinearMapSpec, PrimalSpec, ScheduleSpec, SmoothSpec, SolveConfig, SolveConfigError,
    SolveOutcome, SubspaceSetSpec, XSetSpec,
};

/// Largest least-squares residual accepted for a raw random instance.
pub const CONSISTENCY_TOL: f64 = 1e-8;
/// Substreams tried per realization in raw mode before giving up.
const RAW_ATTEMPTS: u64 = 8;

const PURPOSE_R: u64 = 0;
const PURPOSE_S: u64 = 1;
const PURPOSE_POINT: u64 = 2;
const PURPOSE_RHS: u64 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("realization {index}: no consistent instance after {attempts} draws (residual {residual:e})")]
    Inconsistent { index: usize, attempts: u64, residual: f64 },
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// How the right-hand sides `c`, `d` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FeasibilityMode {
    /// `c = Rx*`, `d = Sx*` for a random planted `x*`.
    #[default]
    GenerateFromPoint,
    /// `c`, `d` drawn like the matrix entries; the instance is redrawn if
    /// inconsistent.
    RawRandom,
}

/// Law of the entries of `R`, `S` and of raw right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EntryDistribution {
    /// Uniform on `[0, 1)`.
    #[default]
    Uniform01,
    StandardGaussian,
}

impl EntryDistribution {
    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            EntryDistribution::Uniform01 => rng.random::<f64>(),
            EntryDistribution::StandardGaussian => StandardNormal.sample(rng),
        }
    }

    fn vec(self, len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..len).map(|_| self.sample(rng)).collect()
    }

    fn matrix(self, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::new(rows, cols, self.vec(rows * cols, rng)).expect("length matches shape")
    }

    /// Planted point whose image `Lx*` has the first two moments of a raw
    /// right-hand side (Gaussian) or the same mean (uniform): `x* ~ N(0, 1/N)`
    /// or `x* = 2U/N`.
    fn planted_point(self, len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let scale = match self {
            EntryDistribution::Uniform01 => 2.0 / len as f64,
            EntryDistribution::StandardGaussian => 1.0 / (len as f64).sqrt(),
        };
        self.vec(len, rng).into_iter().map(|v| v * scale).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Number of unknowns `N`.
    pub nn: usize,
    /// Rows of `R` (the projected block).
    pub m: usize,
    /// Rows of `S`.
    pub n: usize,
    pub gamma: f64,
    /// Strictly decreasing.
    pub tolerances: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub feasibility_mode: FeasibilityMode,
    pub entries: EntryDistribution,
    pub max_iter: usize,
}

impl ExperimentConfig {
    fn preset(m: usize) -> Self {
        Self {
            nn: 1000,
            m,
            n: 100,
            gamma: 1e-2,
            tolerances: vec![1e-4, 5e-5, 1e-5],
            realizations: 20,
            seed: 0,
            feasibility_mode: FeasibilityMode::GenerateFromPoint,
            entries: EntryDistribution::Uniform01,
            max_iter: 1_000_000,
        }
    }

    pub fn table1() -> Self {
        Self::preset(1)
    }

    pub fn table2() -> Self {
        Self::preset(10)
    }

    pub fn table3() -> Self {
        Self::preset(30)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::InvalidConfig(msg));
        if self.m + self.n >= self.nn {
            return bad(format!("need m + n < N, got m = {}, n = {}, N = {}", self.m, self.n, self.nn));
        }
        if self.m + self.n == 0 {
            return bad("need at least one constraint".into());
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.tolerances.is_empty() {
            return bad("empty tolerance list".into());
        }
        if self.tolerances.iter().any(|t| !(*t > 0.0)) {
            return bad("tolerances must be positive".into());
        }
        if self.tolerances.windows(2).any(|w| w[1] >= w[0]) {
            return bad("tolerances must be strictly decreasing".into());
        }
        if self.realizations == 0 {
            return bad("realizations must be at least 1".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        Ok(())
    }

    pub fn tightest_tolerance(&self) -> f64 {
        *self.tolerances.last().expect("validated non-empty")
    }
}

fn stream_rng(seed: u64, index: usize, attempt: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((index as u64) << 16) | (attempt << 4) | purpose);
    rng
}

/// Instance for realization `index`; deterministic in `(seed, index)`.
pub fn gen_instance(config: &ExperimentConfig, index: usize) -> Result<EqualityConstrainedL1, BenchError> {
    config.validate()?;
    let draw_matrices = |attempt| {
        let dist = config.entries;
        let r = dist.matrix(config.m, config.nn, &mut stream_rng(config.seed, index, attempt, PURPOSE_R));
        let s = dist.matrix(config.n, config.nn, &mut stream_rng(config.seed, index, attempt, PURPOSE_S));
        (r, s)
    };
    match config.feasibility_mode {
        FeasibilityMode::GenerateFromPoint => {
            let (r, s) = draw_matrices(0);
            let x_star = config.entries.planted_point(config.nn, &mut stream_rng(config.seed, index, 0, PURPOSE_POINT));
            let c = linalg::matvec(&r, &x_star).map_err(ConvexError::from)?;
            let d = linalg::matvec(&s, &x_star).map_err(ConvexError::from)?;
            Ok(EqualityConstrainedL1::new(r, s, c, d)?)
        }
        FeasibilityMode::RawRandom => {
            let mut residual = f64::NAN;
            for attempt in 0..RAW_ATTEMPTS {
                let (r, s) = draw_matrices(attempt);
                let mut rng = stream_rng(config.seed, index, attempt, PURPOSE_RHS);
                let c = config.entries.vec(config.m, &mut rng);
                let d = config.entries.vec(config.n, &mut rng);
                let inst = EqualityConstrainedL1::new(r, s, c, d)?;
                residual = match inst.consistency_residual() {
                    Ok(v) => v,
                    Err(ConvexError::Linalg(_)) => f64::INFINITY,
                    Err(e) => return Err(e.into()),
                };
                if residual <= CONSISTENCY_TOL {
                    return Ok(inst);
                }
            }
            Err(BenchError::Inconsistent { index, attempts: RAW_ATTEMPTS, residual })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Pcp,
    Cp,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Pcp => "PCP",
            Method::Cp => "CP",
        }
    }
}

/// First iteration (and elapsed loop time) at which `r_k` fell below one
/// tolerance. `reached = false` means the run hit `max_iter` first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Milestone {
    pub iterations: usize,
    pub time_s: f64,
    pub reached: bool,
}

/// Runs from `(0, 0, 0)` until `r_k` drops below every tolerance, recording
/// a milestone per tolerance. Identical to separate runs per tolerance since
/// the trajectory does not depend on the tolerance.
pub fn run_milestones(
    problem: &InclusionProblem,
    schedule: StepSchedule,
    tolerances: &[f64],
    max_iter: usize,
) -> Result<Vec<Milestone>, SolverError> {
    let x0 = vec![0.0; problem.primal_dim()];
    let u0 = vec![0.0; problem.dual_dim()];
    let mut solver = Solver::new(problem, schedule, &x0, &u0)?;
    let mut out = Vec::with_capacity(tolerances.len());
    let start = Instant::now();
    let mut k = 0;
    while out.len() < tolerances.len() && k < max_iter {
        let r = solver.advance()?;
        k += 1;
        // tolerances decrease, so one r_k may satisfy several at once
        while out.len() < tolerances.len() && r.is_finite() && r < tolerances[out.len()] {
            out.push(Milestone { iterations: k, time_s: start.elapsed().as_secs_f64(), reached: true });
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    while out.len() < tolerances.len() {
        out.push(Milestone { iterations: k, time_s: elapsed, reached: false });
    }
    Ok(out)
}

/// Milestones of both methods on one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: usize,
    pub pcp: Vec<Milestone>,
    pub cp: Vec<Milestone>,
}

pub fn run_realization(config: &ExperimentConfig, index: usize) -> Result<RealizationRecord, BenchError> {
    let inst = gen_instance(config, index)?;
    let setup = L1Setup::new(&inst, config.gamma, ProjectionBlock::R)?;
    let pcp = run_milestones(&setup.pcp_problem()?, setup.schedule(), &config.tolerances, config.max_iter)?;
    let cp = run_milestones(&setup.cp_problem()?, setup.schedule(), &config.tolerances, config.max_iter)?;
    Ok(RealizationRecord { index, pcp, cp })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub tolerance: f64,
    pub mean_iterations: f64,
    pub mean_time_s: f64,
    /// Some run hit `max_iter` before reaching the tolerance.
    pub flagged: bool,
}

/// `100·(CP − PCP)/CP` for iterations and time at one tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub tolerance: f64,
    pub iterations_pct: f64,
    pub time_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// PCP rows then CP rows, each in tolerance order.
    pub rows: Vec<ResultRow>,
    pub improvements: Vec<Improvement>,
    pub records: Vec<RealizationRecord>,
}

impl ExperimentResult {
    pub fn row(&self, method: Method, tolerance_index: usize) -> &ResultRow {
        let offset = match method {
            Method::Pcp => 0,
            Method::Cp => self.config.tolerances.len(),
        };
        &self.rows[offset + tolerance_index]
    }
}

pub fn improvement_pct(cp: f64, pcp: f64) -> f64 {
    100.0 * (cp - pcp) / cp
}

fn aggregate(config: &ExperimentConfig, records: &[RealizationRecord]) -> (Vec<ResultRow>, Vec<Improvement>) {
    let count = records.len() as f64;
    let mut rows = Vec::with_capacity(2 * config.tolerances.len());
    for method in [Method::Pcp, Method::Cp] {
        for (j, &tolerance) in config.tolerances.iter().enumerate() {
            let pick = |r: &RealizationRecord| match method {
                Method::Pcp => r.pcp[j],
                Method::Cp => r.cp[j],
            };
            let (mut it, mut t, mut flagged) = (0.0, 0.0, false);
            for rec in records {
                let ms = pick(rec);
                it += ms.iterations as f64;
                t += ms.time_s;
                flagged |= !ms.reached;
            }
            rows.push(ResultRow { method, tolerance, mean_iterations: it / count, mean_time_s: t / count, flagged });
        }
    }
    let nt = config.tolerances.len();
    let improvements = (0..nt)
        .map(|j| Improvement {
            tolerance: config.tolerances[j],
            iterations_pct: improvement_pct(rows[nt + j].mean_iterations, rows[j].mean_iterations),
            time_pct: improvement_pct(rows[nt + j].mean_time_s, rows[j].mean_time_s),
        })
        .collect();
    (rows, improvements)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, BenchError> {
    run_experiment_with(config, Execution::default())
}

/// Realizations run under `exec`; aggregation is ordered by realization
/// index so both modes produce the same rows.
pub fn run_experiment_with(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult, BenchError> {
    config.validate()?;
    let records = map_indexed(exec, config.realizations, |i| run_realization(config, i))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let (rows, improvements) = aggregate(config, &records);
    Ok(ExperimentResult { config: config.clone(), rows, improvements, records })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub i: usize,
    pub j: usize,
    pub tau: f64,
    pub gamma: f64,
    pub in_rb: bool,
    pub in_sb: bool,
}

/// `resolution × resolution` grid over `[0, 2b]²`, `τ_i = 2b·i/(resolution−1)`,
/// row-major in `i`.
pub fn emit_region_grid(b: f64, resolution: usize) -> Result<Vec<RegionCell>, BenchError> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(BenchError::InvalidConfig(format!("b must be positive, got {b}")));
    }
    if resolution < 2 {
        return Err(BenchError::InvalidConfig(format!("resolution must be at least 2, got {resolution}")));
    }
    let h = 2.0 * b / (resolution - 1) as f64;
    let axis: Vec<f64> = (0..resolution).map(|i| if i + 1 == resolution { 2.0 * b } else { h * i as f64 }).collect();
    let mut cells = Vec::with_capacity(resolution * resolution);
    for (i, &tau) in axis.iter().enumerate() {
        for (j, &gamma) in axis.iter().enumerate() {
            let m = stepsize_region_membership(tau, gamma, b);
            cells.push(RegionCell { i, j, tau, gamma, in_rb: m.in_rb, in_sb: m.in_sb });
        }
    }
    Ok(cells)
}
