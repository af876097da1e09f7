use conic::{residuals, solve, ConicProgram, ProgramBuilder, PsdBlock, RowBuilder, SolverOptions, Status};
use proptest::prelude::*;

fn orthant_min() -> ConicProgram {
    // min x s.t. x ≥ 0
    let mut b = ProgramBuilder::new();
    let x = b.add_nonneg(1);
    b.add_cost(x.index(0), 1.0);
    b.build()
}

fn shifted_psd() -> ConicProgram {
    // min tr Z s.t. Z − I ⪰ 0, as Z = I + S with S ⪰ 0
    let mut b = ProgramBuilder::new();
    let s = b.add_psd(2);
    for i in 0..2 {
        b.add_cost_entry(s, i, i, 1.0);
    }
    b.build()
}

fn disk_box() -> (ConicProgram, PsdBlock) {
    // min −x₁ − x₂ s.t. [[1, x₁],[x₁, 1]] ⪰ 0, x₂ + s = 1, s ≥ 0
    let mut b = ProgramBuilder::new();
    let z = b.add_psd(2);
    let x = b.add_free(2);
    let s = b.add_nonneg(1);
    b.add_cost(x.index(0), -1.0);
    b.add_cost(x.index(1), -1.0);
    for i in 0..2 {
        let mut r = RowBuilder::new();
        r.add_entry(z, i, i, 1.0);
        b.add_row(r, 1.0);
    }
    let mut r = RowBuilder::new();
    r.add_entry(z, 1, 0, 1.0).add(x.index(0), -1.0);
    b.add_row(r, 0.0);
    let mut r = RowBuilder::new();
    r.add(x.index(1), 1.0).add(s.index(0), 1.0);
    b.add_row(r, 1.0);
    (b.build(), z)
}

fn tracked() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn orthant_example() {
    let res = solve(&orthant_min(), &tracked()).unwrap();
    assert_eq!(res.status, Status::Optimal);
    assert!(res.primal_objective.abs() <= 1e-7, "{}", res.primal_objective);
}

#[test]
fn shifted_psd_example() {
    let res = solve(&shifted_psd(), &tracked()).unwrap();
    assert_eq!(res.status, Status::Optimal);
    // tr Z = tr S + tr I
    let value = res.primal_objective + 2.0;
    assert!((value - 2.0).abs() <= 1e-7, "{value}");
}

#[test]
fn shifted_psd_with_equality_form() {
    // same problem with Z itself as variable: Z − S = I, both PSD
    let mut b = ProgramBuilder::new();
    let z = b.add_psd(2);
    let s = b.add_psd(2);
    for i in 0..2 {
        b.add_cost_entry(z, i, i, 1.0);
    }
    for i in 0..2 {
        for j in 0..=i {
            let mut r = RowBuilder::new();
            r.add_entry(z, i, j, 1.0).add_entry(s, i, j, -1.0);
            b.add_row(r, if i == j { 1.0 } else { 0.0 });
        }
    }
    let p = b.build();
    let res = solve(&p, &tracked()).unwrap();
    assert_eq!(res.status, Status::Optimal);
    assert!((res.primal_objective - 2.0).abs() <= 1e-7, "{}", res.primal_objective);
    let zm = z.matrix(&res.x);
    assert!((zm[(0, 0)] - 1.0).abs() < 1e-6 && zm[(1, 0)].abs() < 1e-6);
}

#[test]
fn disk_box_example() {
    let (p, _) = disk_box();
    let res = solve(&p, &tracked()).unwrap();
    assert_eq!(res.status, Status::Optimal);
    assert!((res.primal_objective + 2.0).abs() <= 1e-7, "{}", res.primal_objective);
    assert!((res.dual_objective + 2.0).abs() <= 1e-7);
}

#[test]
fn weak_duality_along_iterates() {
    let (p, _) = disk_box();
    for prog in [orthant_min(), shifted_psd(), p] {
        let res = solve(&prog, &tracked()).unwrap();
        for it in &res.history {
            assert!(it.pobj >= it.dobj - 1e-9, "{it}");
        }
    }
}

#[test]
fn stored_residuals_match_recomputation() {
    let (p, _) = disk_box();
    let res = solve(&p, &tracked()).unwrap();
    let r = residuals(&p, &res);
    assert!((r.primal - res.residuals.primal).abs() <= 1e-12);
    assert!((r.dual - res.residuals.dual).abs() <= 1e-12);
    assert!((r.gap - res.residuals.gap).abs() <= 1e-12);
    assert!(r.max() <= 1e-8);
}

#[test]
fn residuals_of_hand_built_points() {
    let (p, _) = disk_box();
    let s2 = std::f64::consts::SQRT_2;
    // Z = [[1,1],[1,1]], x = (1, 1), slack 0
    let x = vec![1.0, s2, 1.0, 1.0, 1.0, 0.0];
    // dual: y = (y₀, y₁, y₂, y₃) with Aᵀy + s = c
    let y = vec![-0.5, -0.5, 1.0, -1.0];
    let at = p.apply_transpose(&y);
    let s: Vec<f64> = p.cost.iter().zip(&at).map(|(c, a)| c - a).collect();
    let mut res = solve(&p, &tracked()).unwrap();
    res.x = x.clone();
    res.y = y.clone();
    res.s = s.clone();
    let r = residuals(&p, &res);
    assert!(r.primal < 1e-15 && r.dual < 1e-15 && r.gap < 1e-15, "{r:?}");
    // perturb the slack variable by 0.1: ‖Az − b‖ = 0.1
    res.x[5] = 0.1;
    let r = residuals(&p, &res);
    let bnorm = (3.0f64).sqrt();
    assert!((r.primal - 0.1 / (1.0 + bnorm)).abs() < 1e-15);
}

#[test]
fn detects_primal_infeasibility() {
    // x ≥ 0 with x = −1
    let mut b = ProgramBuilder::new();
    let x = b.add_nonneg(1);
    let mut r = RowBuilder::new();
    r.add(x.index(0), 1.0);
    b.add_row(r, -1.0);
    let res = solve(&b.build(), &tracked()).unwrap();
    assert_eq!(res.status, Status::Infeasible);
}

#[test]
fn detects_unboundedness() {
    // min −x₁ with x₁ − x₂ = 0, x ≥ 0
    let mut b = ProgramBuilder::new();
    let x = b.add_nonneg(2);
    b.add_cost(x.index(0), -1.0);
    let mut r = RowBuilder::new();
    r.add(x.index(0), 1.0).add(x.index(1), -1.0);
    b.add_row(r, 0.0);
    let res = solve(&b.build(), &tracked()).unwrap();
    assert_eq!(res.status, Status::Unbounded);
}

#[test]
fn dependent_rows_are_dropped() {
    let (mut p, _) = disk_box();
    p.rows.push(p.rows[0].clone());
    p.rhs.push(1.0);
    let res = solve(&p, &tracked()).unwrap();
    assert_eq!(res.dropped_rows, vec![4]);
    assert_eq!(res.status, Status::Optimal);
    assert!((res.primal_objective + 2.0).abs() <= 1e-7);
}

#[test]
fn max_iter_is_reported() {
    let (p, _) = disk_box();
    let opts = SolverOptions { max_iter: 2, ..Default::default() };
    let res = solve(&p, &opts).unwrap();
    assert_eq!(res.status, Status::MaxIter);
    assert!(res.into_optimal().is_err());
}

#[test]
fn stall_below_reduced_tol_is_inaccurate() {
    // a gap of 1e-20 is out of reach in double precision, so the run stalls
    let (p, _) = disk_box();
    let opts = SolverOptions { tol: 1e-20, max_iter: 500, ..Default::default() };
    let res = solve(&p, &opts).unwrap();
    assert_eq!(res.status, Status::Inaccurate);
    assert!(res.residuals.max() <= 1e-6 && !res.is_optimal());
    assert!((res.primal_objective + 2.0).abs() <= 1e-7);
    let strict = SolverOptions { reduced_tol: 0.0, ..opts };
    let res = solve(&p, &strict).unwrap();
    assert_eq!(res.status, Status::NumericalFailure);
    assert!(res.into_optimal().is_err());
}

#[test]
fn deterministic_runs() {
    let (p, _) = disk_box();
    let a = solve(&p, &tracked()).unwrap();
    let b = solve(&p, &tracked()).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.x, b.x);
    assert_eq!(a.y, b.y);
}

#[test]
fn cost_scaling() {
    let (p, _) = disk_box();
    let mut q = p.clone();
    q.cost.iter_mut().for_each(|c| *c *= 10.0);
    let a = solve(&p, &tracked()).unwrap();
    let b = solve(&q, &tracked()).unwrap();
    assert!((b.primal_objective - 10.0 * a.primal_objective).abs() <= 1e-7 * b.primal_objective.abs());
    for (u, v) in a.x.iter().zip(&b.x) {
        assert!((u - v).abs() <= 1e-6);
    }
}

/// Max-cut SDP on the 5-cycle: min Σ_edges 2 Z_ij, diag Z = 1, Z ⪰ 0.
#[test]
fn maxcut_relaxation() {
    let n = 5;
    let w = [[0., 1., 0., 0., 1.], [1., 0., 1., 0., 0.], [0., 1., 0., 1., 0.], [0., 0., 1., 0., 1.], [1., 0., 0., 1., 0.]];
    let mut b = ProgramBuilder::new();
    let z = b.add_psd(n);
    for i in 0..n {
        for j in 0..i {
            if w[i][j] != 0.0 {
                b.add_cost_entry(z, i, j, 2.0 * w[i][j]);
            }
        }
        let mut r = RowBuilder::new();
        r.add_entry(z, i, i, 1.0);
        b.add_row(r, 1.0);
    }
    let p = b.build();
    let res = solve(&p, &tracked()).unwrap();
    assert_eq!(res.status, Status::Optimal);
    // 5-cycle: optimum −5 cos(π/5)·2 = −10 cos(π/5)
    let expect = -10.0 * (std::f64::consts::PI / 5.0).cos();
    assert!((res.primal_objective - expect).abs() < 1e-6, "{} vs {}", res.primal_objective, expect);
    let zm = z.matrix(&res.x);
    assert!(conic::linalg::min_eigenvalue(&zm) > -1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Random feasible and bounded LPs: weak duality on every iterate and a
    /// certified optimum at the end.
    #[test]
    fn random_lps(seed in 0u64..10_000, n in 2usize..6, m in 1usize..4) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = m.min(n - 1);
        let mut b = ProgramBuilder::new();
        let x = b.add_nonneg(n);
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        for _ in 0..m {
            let mut r = RowBuilder::new();
            let mut rhs = 0.0;
            for j in 0..n {
                let a: f64 = rng.gen_range(-1.0..1.0);
                r.add(x.index(j), a);
                rhs += a * x0[j];
            }
            b.add_row(r, rhs);
        }
        for j in 0..n {
            b.add_cost(x.index(j), rng.gen_range(0.1..2.0));
        }
        let p = b.build();
        let res = solve(&p, &tracked()).unwrap();
        prop_assert_eq!(res.status, Status::Optimal);
        prop_assert!(res.primal_objective <= p.objective(&x0) + 1e-7);
        for it in &res.history {
            prop_assert!(it.pobj >= it.dobj - 1e-9, "{}", it);
        }
    }
}
