mod common;

use common::{planted_accelerated, planted_linear};
use ppds::linalg::{self, DenseMatrix};
use ppds::operators::{self, make_subspace_projector, LinearMap, MonotoneOp, SubspaceSpec};
use ppds::solver::{
    linear_rate_params, schedule_advance, solve, IterationState, LyapunovWeights, Solver, SolverError, StepSchedule,
    StepsizeCheck, StopRule,
};

/// `n × k` with orthonormal columns.
fn orthonormal(n: usize, k: usize, seed: u64) -> DenseMatrix {
    let mut r = common::rng(seed);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < k {
        let mut v = common::gaussian_vec(n, &mut r);
        for c in &cols {
            let d = linalg::dot(&v, c);
            linalg::axpy(-d, c, &mut v);
        }
        let nv = linalg::norm(&v);
        cols.push(v.iter().map(|x| x / nv).collect());
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    DenseMatrix::from_rows(&rows).unwrap()
}

fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let bt = b.transpose();
    let data =
        (0..a.rows()).flat_map(|i| (0..b.cols()).map(move |j| (i, j))).map(|(i, j)| linalg::dot(a.row(i), bt.row(j)));
    DenseMatrix::new(a.rows(), b.cols(), data.collect()).unwrap()
}

#[test]
fn every_iterate_lies_in_both_constraint_sets() {
    let (n, m) = (20, 12);
    let q = orthonormal(m, 5, 1);
    let mut r = common::rng(2);
    let lm = matmul(&q, &DenseMatrix::random_gaussian(5, n, &mut r));
    let l = LinearMap::from_matrix(lm).unwrap();
    let pv = make_subspace_projector(SubspaceSpec::OrthonormalBasis(q)).unwrap();
    let pl = planted_accelerated(3, n, m, 1.0, 1.0);
    let t = pl.problem.t().clone();
    let clip = |u: &[f64], _t: f64| u.iter().map(|v| v.clamp(-1.0, 1.0)).collect::<Vec<_>>();
    let problem = ppds::solver::InclusionProblem::builder(l.clone())
        .a(MonotoneOp::new(0.0, operators::soft_threshold))
        .b_inv(MonotoneOp::new(0.0, clip))
        .t(t.clone())
        .pv(pv.clone())
        .build()
        .unwrap();
    let gamma = 0.5;
    let tau = 0.9 / (gamma * l.norm_bound().powi(2));
    let x0 = common::gaussian_vec(n, &mut r);
    let u0 = pv.apply(&common::gaussian_vec(m, &mut r));
    let mut s = Solver::new(&problem, StepSchedule::Static { tau, gamma, theta: 1.0 }, &x0, &u0).unwrap();
    for _ in 0..300 {
        s.advance().unwrap();
        let st = s.state();
        assert!(linalg::norm(&linalg::sub(&pv.apply(&st.u), &st.u)) <= 1e-12 * (1.0 + linalg::norm(&st.u)));
        assert!(linalg::norm(&linalg::sub(&t.apply(&st.x), &st.x)) <= 1e-12 * (1.0 + linalg::norm(&st.x)));
    }
}

#[test]
fn accelerated_steps_decrease_like_one_over_k() {
    let rho = 0.7;
    let schedule = StepSchedule::Accelerated { tau0: 2.0, gamma0: 0.3, rho };
    let mut st = IterationState::new(vec![0.0], vec![0.0], schedule.initial());
    let n = 100_000;
    for _ in 0..n {
        let p = schedule_advance(&schedule, &st);
        assert!(p.tau < st.tau);
        assert!((p.tau * p.gamma - 0.6).abs() <= 1e-13 * 0.6);
        st.tau = p.tau;
        st.gamma = p.gamma;
        st.theta = p.theta;
    }
    assert!((n as f64 * rho * st.tau - 1.0).abs() < 0.01);
}

#[test]
fn static_fejer_quantity_is_nonincreasing() {
    let pl = planted_linear(4, 30, 12, 1.0, 0.5, 0.5);
    let gamma = 0.8;
    let tau = 0.9 / (gamma * pl.l_norm * pl.l_norm);
    let x0 = vec![0.0; 30];
    let u0 = vec![0.0; 12];
    let mut s = Solver::new(&pl.problem, StepSchedule::Static { tau, gamma, theta: 1.0 }, &x0, &u0).unwrap();
    let l = pl.problem.l();
    // Υ_k + ‖p^k − x̂‖²/τ with β = ∞
    let fejer = |st: &IterationState, x_prev: &[f64]| {
        let dp = linalg::sub(&st.last_p, x_prev);
        let de = linalg::sub(&st.last_eta, &pl.u_hat);
        linalg::norm_sq(&de) / gamma
            + 2.0 * linalg::dot(&l.apply(&dp), &de)
            + linalg::norm_sq(&dp) / tau
            + linalg::dist_sq(&st.last_p, &pl.x_hat) / tau
    };
    let mut x_prev = s.state().x.clone();
    s.advance().unwrap();
    let mut prev = fejer(s.state(), &x_prev);
    for _ in 0..2000 {
        x_prev = s.state().x.clone();
        s.advance().unwrap();
        let v = fejer(s.state(), &x_prev);
        assert!(v <= prev + 1e-9, "{v} > {prev}");
        prev = v;
    }
}

#[test]
fn linear_rate_lyapunov_contracts() {
    let (rho, chi) = (2.0, 0.5);
    let pl = planted_linear(5, 25, 15, 3.0, rho, chi);
    let lr = linear_rate_params(rho, chi, f64::INFINITY, f64::INFINITY, pl.l_norm, 1.0).unwrap();
    let w = LyapunovWeights { rho, chi, mu: lr.mu, beta: f64::INFINITY, delta: f64::INFINITY };
    let x0 = vec![0.0; 25];
    let u0 = vec![0.0; 15];
    let omega0 = w.omega(&x0, &u0, &pl.x_hat, &pl.u_hat);
    let mut s = Solver::new(&pl.problem, StepSchedule::LinearRate(lr), &x0, &u0).unwrap();
    for k in 1..=500 {
        s.advance().unwrap();
        let st = s.state();
        let lhs = w.contraction_lhs(lr.omega, &st.x, &st.u, &pl.x_hat, &pl.u_hat);
        assert!(lhs <= lr.omega.powi(k) * omega0 * (1.0 + 1e-8), "k = {k}");
    }
}

#[test]
fn regimes_reject_mismatched_problems() {
    let lin = planted_linear(6, 10, 5, 1.0, 1.0, 1.0);
    // χ > 0 rules out the accelerated regime
    assert!(matches!(StepSchedule::accelerated_for(&lin.problem, 0.1), Err(SolverError::RegimeMismatch(_))));

    let acc = planted_accelerated(7, 10, 5, 1.0, 1.0);
    let lr = linear_rate_params(1.0, 1.0, f64::INFINITY, f64::INFINITY, acc.l_norm, 1.0).unwrap();
    let zeros = (vec![0.0; 10], vec![0.0; 5]);
    let err = Solver::new(&acc.problem, StepSchedule::LinearRate(lr), &zeros.0, &zeros.1).unwrap_err();
    assert!(matches!(err, SolverError::RegimeMismatch(_)));

    // static steps on the boundary are not admissible
    let gamma = 1.0;
    let tau = 1.0 / (gamma * acc.l_norm * acc.l_norm);
    let err =
        solve(&acc.problem, StepSchedule::Static { tau, gamma, theta: 1.0 }, &zeros.0, &zeros.1, StopRule::default());
    assert!(matches!(
        err,
        Err(SolverError::StepsizeRegimeMismatch { found: StepsizeCheck::SatisfiedWithEquality, .. })
    ));
}

#[test]
fn accelerated_run_converges_to_planted_point() {
    let pl = planted_accelerated(8, 40, 15, 1.0, 1.0);
    let schedule = StepSchedule::accelerated_for(&pl.problem, 0.5 / pl.l_norm).unwrap();
    let rep = solve(&pl.problem, schedule, &[0.0; 40], &[0.0; 15], StopRule::new(1e-13, 100_000)).unwrap();
    assert!(linalg::norm_inf(&linalg::sub(&rep.final_x, &pl.x_hat)) < 1e-8);
    assert!(linalg::norm_inf(&linalg::sub(&rep.final_u, &pl.u_hat)) < 1e-6);
}
