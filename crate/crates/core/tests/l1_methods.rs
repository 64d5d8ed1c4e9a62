mod common;

use ppds::bench::{gen_instance, ExperimentConfig};
use ppds::convex::{l1_lp_oracle, EqualityConstrainedL1, L1Setup, OracleError, ProjectionBlock};
use ppds::linalg::{self, DenseMatrix};
use ppds::operators::soft_threshold;
use ppds::solver::{solve_with, Solver, StopReason, StopRule};

fn small_instance(seed: u64, nn: usize, m: usize, n: usize) -> EqualityConstrainedL1 {
    let mut r = common::rng(seed);
    let rm = DenseMatrix::random_gaussian(m, nn, &mut r);
    let sm = DenseMatrix::random_gaussian(n, nn, &mut r);
    let x = common::gaussian_vec(nn, &mut r);
    let c = linalg::matvec(&rm, &x).unwrap();
    let d = linalg::matvec(&sm, &x).unwrap();
    EqualityConstrainedL1::new(rm, sm, c, d).unwrap()
}

/// `(I − Rᵀ(RRᵀ)⁻¹R)x + Rᵀ(RRᵀ)⁻¹c`, via the normal equations solved with
/// Gauss–Jordan on the small Gram matrix.
fn reference_projection(r: &DenseMatrix, c: &[f64], x: &[f64]) -> Vec<f64> {
    let m = r.rows();
    let mut g: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| linalg::dot(r.row(i), r.row(j))).collect()).collect();
    let mut rhs: Vec<f64> = (0..m).map(|i| linalg::dot(r.row(i), x) - c[i]).collect();
    for col in 0..m {
        let piv = (col..m).max_by(|&a, &b| g[a][col].abs().total_cmp(&g[b][col].abs())).unwrap();
        g.swap(col, piv);
        rhs.swap(col, piv);
        for row in 0..m {
            if row != col {
                let f = g[row][col] / g[col][col];
                for k in 0..m {
                    g[row][k] -= f * g[col][k];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    let y: Vec<f64> = (0..m).map(|i| rhs[i] / g[i][i]).collect();
    let mut out = x.to_vec();
    for i in 0..m {
        linalg::axpy(-y[i], r.row(i), &mut out);
    }
    out
}

/// Direct transcription of the two iterations for `min ‖x‖₁ s.t. Lx = b`.
fn reference_run(
    inst: &EqualityConstrainedL1,
    gamma: f64,
    tau: f64,
    project: bool,
    iters: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (l, b) = inst.stacked().unwrap();
    let (mut x, mut xbar, mut u) = (vec![0.0; l.cols()], vec![0.0; l.cols()], vec![0.0; l.rows()]);
    for _ in 0..iters {
        let lx = linalg::matvec(&l, &xbar).unwrap();
        for i in 0..u.len() {
            u[i] += gamma * (lx[i] - b[i]);
        }
        let ltu = linalg::adjoint_matvec(&l, &u).unwrap();
        let z: Vec<f64> = (0..x.len()).map(|i| x[i] - tau * ltu[i]).collect();
        let p = soft_threshold(&z, tau);
        let x_new = if project { reference_projection(&inst.r, &inst.c, &p) } else { p.clone() };
        xbar = (0..x.len()).map(|i| x_new[i] + (p[i] - x[i])).collect();
        x = x_new;
    }
    (x, u)
}

#[test]
fn first_step_matches_hand_computation() {
    let inst = small_instance(1, 8, 2, 3);
    let setup = L1Setup::new(&inst, 0.3, ProjectionBlock::R).unwrap();
    let (gamma, tau) = (setup.gamma(), setup.tau());
    let (l, b) = inst.stacked().unwrap();
    // from zero: u¹ = −γb, p¹ = soft(−τLᵀu¹, τ)
    let u1: Vec<f64> = b.iter().map(|v| -gamma * v).collect();
    let z: Vec<f64> = linalg::adjoint_matvec(&l, &u1).unwrap().iter().map(|v| -tau * v).collect();
    let p1 = soft_threshold(&z, tau);

    let zeros = (vec![0.0; 8], vec![0.0; 5]);
    let cp = setup.cp_problem().unwrap();
    let mut s = Solver::new(&cp, setup.schedule(), &zeros.0, &zeros.1).unwrap();
    s.advance().unwrap();
    let st = s.state();
    assert!(linalg::norm_inf(&linalg::sub(&st.u, &u1)) < 1e-15);
    assert!(linalg::norm_inf(&linalg::sub(&st.x, &p1)) < 1e-15);
    let xbar: Vec<f64> = p1.iter().map(|v| 2.0 * v).collect();
    assert!(linalg::norm_inf(&linalg::sub(&st.x_bar, &xbar)) < 1e-15);

    let pcp = setup.pcp_problem().unwrap();
    let mut s = Solver::new(&pcp, setup.schedule(), &zeros.0, &zeros.1).unwrap();
    s.advance().unwrap();
    let st = s.state();
    let x1 = reference_projection(&inst.r, &inst.c, &p1);
    assert!(linalg::norm_inf(&linalg::sub(&st.u, &u1)) < 1e-15);
    assert!(linalg::norm_inf(&linalg::sub(&st.x, &x1)) < 1e-12);
    let xbar: Vec<f64> = (0..8).map(|i| x1[i] + p1[i]).collect();
    assert!(linalg::norm_inf(&linalg::sub(&st.x_bar, &xbar)) < 1e-12);
}

#[test]
fn pcp_without_projected_block_is_cp() {
    let full = small_instance(2, 10, 1, 4);
    let inst = EqualityConstrainedL1::new(DenseMatrix::zeros(0, 10), full.s.clone(), vec![], full.d.clone()).unwrap();
    let setup = L1Setup::new(&inst, 0.5, ProjectionBlock::R).unwrap();
    let stop = StopRule::new(1e-8, 20_000);
    let pcp = setup.pcp_solve(stop).unwrap();
    let cp = setup.cp_solve(stop).unwrap();
    assert!(pcp.same_trajectory(&cp));
}

#[test]
fn iterations_agree_with_reference_transcription() {
    let inst = small_instance(3, 10, 2, 3);
    let setup = L1Setup::new(&inst, 0.2, ProjectionBlock::R).unwrap();
    let iters = 200;
    let stop = StopRule::new(0.0, iters);
    for project in [false, true] {
        let rep = if project { setup.pcp_solve(stop) } else { setup.cp_solve(stop) }.unwrap();
        assert_eq!(rep.iterations, iters);
        let (x, u) = reference_run(&inst, setup.gamma(), setup.tau(), project, iters);
        assert!(linalg::norm_inf(&linalg::sub(&rep.final_x, &x)) < 1e-12, "project = {project}");
        assert!(linalg::norm_inf(&linalg::sub(&rep.final_u, &u)) < 1e-12, "project = {project}");
    }
}

#[test]
fn both_methods_reach_the_oracle_solution() {
    let cfg = ExperimentConfig { nn: 12, m: 2, n: 3, realizations: 1, ..ExperimentConfig::table2() };
    let mut checked = 0;
    for index in 0..10 {
        let inst = gen_instance(&cfg, index).unwrap();
        let x_star = match l1_lp_oracle(&inst) {
            Ok(x) => x,
            Err(OracleError::Degenerate { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let setup = L1Setup::new(&inst, 1e-2, ProjectionBlock::R).unwrap();
        let stop = StopRule::new(1e-10, 2_000_000);
        for rep in [setup.pcp_solve(stop).unwrap(), setup.cp_solve(stop).unwrap()] {
            assert_eq!(rep.stop_reason, StopReason::ToleranceReached);
            assert!(linalg::norm_inf(&linalg::sub(&rep.final_x, &x_star)) < 1e-6);
        }
        checked += 1;
    }
    assert!(checked >= 5);
}

#[test]
fn projected_block_s_keeps_s_feasible() {
    let inst = small_instance(4, 15, 2, 4);
    let setup = L1Setup::new(&inst, 0.1, ProjectionBlock::S).unwrap();
    let pcp = setup.pcp_problem().unwrap();
    let bound = 1e-9 * (1.0 + linalg::norm_inf(&inst.d));
    let mut worst = 0.0f64;
    let zeros = (vec![0.0; 15], vec![0.0; 6]);
    solve_with(&pcp, setup.schedule(), &zeros.0, &zeros.1, StopRule::new(1e-6, 50_000), |s, _| {
        let sx = linalg::matvec(&inst.s, &s.x).unwrap();
        worst = worst.max(linalg::norm_inf(&linalg::sub(&sx, &inst.d)));
    })
    .unwrap();
    assert!(worst <= bound, "{worst:e}");
}
