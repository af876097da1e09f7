//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use anisofit::anisotropy::{anisoperimetric_ratio, AnisotropyFunction};
use anisofit::curve::{spectrum, CurveSpectrum};
use anisofit::pipeline::{
    aligned_deviation, area_matrix, circle_curve, dendrite_curve, eotc, eotc_report, solve_anisotropy, wulff_curve,
    AnisotropyProblemSpec, AnisotropyResult, ConstraintKind,
};
use anisofit::qcqp::{solve_relaxation, verify_ordering};
use anisofit::trigcone::cone_membership;
use conic::{solve, ProgramBuilder, RowBuilder, SolverOptions, Status};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    failed: usize,
    /// Every quadratic-kind result, for the rank and gap checks.
    solves: Vec<(String, AnisotropyResult)>,
}

impl Report {
    fn line(&mut self, id: usize, pass: bool, detail: String) {
        println!("criterion {id:>2}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }

    fn solve(&mut self, label: &str, s: &CurveSpectrum, modes: usize, kind: ConstraintKind) -> AnisotropyResult {
        let r = solve_anisotropy(&AnisotropyProblemSpec::new(s.clone(), modes, kind))
            .unwrap_or_else(|e| panic!("{label}: {e}"));
        if kind == ConstraintKind::Quadratic {
            self.solves.push((label.to_string(), r.clone()));
        }
        r
    }
}

fn kobayashi(r: &mut Report) {
    let mu = AnisotropyFunction::kobayashi(0.99 / 8.0, 3, 4);
    let s = spectrum(&wulff_curve(&mu, 2000).unwrap(), 10).unwrap();
    let res = r.solve("kobayashi N=10", &s, 10, ConstraintKind::Quadratic);
    let al = aligned_deviation(&res.sigma, &mu, 3600, 360).unwrap();
    let gap = res.gap.unwrap_or(f64::INFINITY);
    let pass = al.deviation <= 0.05 && gap <= 1e-3 && res.seconds <= 30.0;
    r.line(1, pass, format!("kobayashi recovery: deviation {:.3e}, gap {gap:.2e}, {:.2} s", al.deviation, res.seconds));
}

fn dendrite(r: &mut Report) {
    let curve = dendrite_curve(1000).unwrap();
    let s = spectrum(&curve, 50).unwrap();
    let a = r.solve("dendrite N=20", &s, 20, ConstraintKind::Quadratic);
    let b = r.solve("dendrite N=50", &s, 50, ConstraintKind::Quadratic);
    let (ga, gb) = (a.gap.unwrap_or(f64::INFINITY), b.gap.unwrap_or(f64::INFINITY));
    let pass = ga <= 1e-3 && gb <= 1e-4 && b.seconds <= 300.0;
    r.line(2, pass, format!("dendrite gaps: N=20 {ga:.2e}, N=50 {gb:.2e} ({:.1} s)", b.seconds));
}

fn circle(r: &mut Report) {
    let s = spectrum(&circle_curve(1.0, 1000).unwrap(), 10).unwrap();
    let lin = r.solve("circle linear", &s, 10, ConstraintKind::Linear);
    let quad = r.solve("circle quadratic N=10", &s, 10, ConstraintKind::Quadratic);
    let vals: Vec<f64> = (0..360).map(|i| quad.sigma.evaluate(2.0 * PI * i as f64 / 360.0)).collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = (hi - lo) / mean;
    let ratio = quad.ratio.unwrap_or(f64::NAN);
    let pass = (lin.objective - 2.0 * PI).abs() <= 1e-2 && spread <= 1e-3 && (ratio - 1.0).abs() <= 1e-2;
    r.line(
        3,
        pass,
        format!("circle: linear value {:.6}, quadratic spread {spread:.2e}, ratio {ratio:.8}", lin.objective),
    );
}

fn anisoperimetric(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    let mut last = None;
    for i in 0..20 {
        let curve = common::random_curve(&mut rng, 20_000);
        let s = spectrum(&curve, 10).unwrap();
        let res = r.solve(&format!("random curve {i}"), &s, 10, ConstraintKind::Quadratic);
        worst = worst.min(res.ratio.unwrap_or(f64::NEG_INFINITY));
        last = Some(res.sigma);
    }
    // Γ = ∂W_σ, moved and rescaled, for the last solved σ
    let sigma = last.unwrap();
    let wulff = wulff_curve(&sigma, 4000).unwrap().scaled(2.5).translated([1.0, -3.0]);
    let homothetic = anisoperimetric_ratio(&sigma, &spectrum(&wulff, sigma.modes()).unwrap()).unwrap();
    let pass = worst >= 1.0 - 1e-6 && (homothetic - 1.0).abs() <= 1e-2;
    r.line(4, pass, format!("anisoperimetric: min ratio over 20 curves {worst:.9}, homothetic ratio {homothetic:.9}"));
}

fn ordering(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SolverOptions::default();
    let mut violations = 0;
    let mut margin = f64::INFINITY;
    for _ in 0..50 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(0..n);
        let convex = rng.gen_bool(0.3);
        let inst = common::random_box_qcqp(&mut rng, n, m, convex);
        let sol = solve_relaxation(&inst.problem, &opts).unwrap();
        let grid = inst.grid_optimum(if n - m == 3 { 61 } else { 201 });
        margin = margin.min(grid - sol.objective_value);
        if !verify_ordering(&sol, grid) {
            violations += 1;
        }
    }
    r.line(5, violations == 0, format!("relaxation ordering: {violations} violations in 50, smallest grid − relaxed {margin:.3e}"));
}

fn rank_and_gap(r: &mut Report) {
    let mut bad = Vec::new();
    let mut tight = 0;
    for (label, res) in &r.solves {
        let n = 2 * res.modes;
        if res.rank_defect.is_none_or(|k| k > n - 1) {
            bad.push(format!("{label}: rank {:?}", res.rank_defect));
        }
        if let (Some(g), Some(p)) = (res.gap, res.primal_objective) {
            if g <= 1e-8 {
                tight += 1;
                if (p - res.objective).abs() > 1e-6 * res.objective.abs().max(1.0) {
                    bad.push(format!("{label}: primal {p} vs relaxed {}", res.objective));
                }
            }
        }
    }
    let count = r.solves.len();
    let detail = format!("rank and gap on {count} quadratic solves ({tight} with gap ≤ 1e-8) {}", bad.join("; "));
    r.line(6, bad.is_empty() && count > 0, detail);
}

fn cone_oracle(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = SolverOptions::default();
    let (mut disagree, mut banded, mut members) = (0, 0, 0);
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let amp = rng.gen_range(0.0..1.0);
        let sigma = common::random_sigma(&mut rng, n, amp).with_modes(n);
        // spread the stiffness so that both outcomes occur
        let sigma = AnisotropyFunction::new(
            sigma.coefficients().iter().enumerate().map(|(k, c)| if k == 0 { *c } else { c / (k * k).max(1) as f64 }).collect(),
        )
        .unwrap();
        let gs = common::grid_min(|nu| sigma.evaluate(nu), 10_000);
        let gg = common::grid_min(|nu| sigma.stiffness(nu), 10_000);
        if gs.abs() < 1e-5 || gg.abs() < 1e-5 {
            banded += 1;
            continue;
        }
        let oracle = gs >= 0.0 && gg >= 0.0;
        let m = cone_membership(&sigma, &opts).unwrap();
        members += m.member as usize;
        if m.member != oracle {
            disagree += 1;
        }
    }
    r.line(
        7,
        disagree == 0,
        format!("cone oracle: {disagree} disagreements, {members} members, {banded} in the margin band"),
    );
}

fn wulff_area(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=20);
        let sigma = common::random_sigma(&mut rng, n, 0.8);
        let x = DVector::from_vec(sigma.to_real_split());
        let q = -(x.transpose() * area_matrix(n) * &x)[(0, 0)];
        let quad = common::wulff_area_quadrature(&sigma, 10_000);
        worst = worst.max((q - quad).abs() / quad.abs());
    }
    r.line(8, worst <= 1e-6, format!("Wulff area: worst relative difference {worst:.2e}"));
}

fn solver_suite(r: &mut Report) {
    let opts = SolverOptions::default();
    let mut errors = Vec::new();
    let mut duality_breaks = 0;
    let mut check = |name: &str, p: &conic::ConicProgram, expect: f64, offset: f64| {
        let res = solve(p, &opts).unwrap();
        let v = res.primal_objective + offset;
        if res.status != Status::Optimal || (v - expect).abs() > 1e-7 {
            errors.push(format!("{name}: {v}"));
        }
        duality_breaks += res.history.iter().filter(|it| it.pobj < it.dobj - 1e-9).count();
    };

    // min x subject to x ≥ 0
    let mut b = ProgramBuilder::new();
    let x = b.add_nonneg(1);
    b.add_cost(x.index(0), 1.0);
    check("orthant", &b.build(), 0.0, 0.0);

    // min tr Z subject to Z − I ⪰ 0, written Z = I + S
    let mut b = ProgramBuilder::new();
    let s = b.add_psd(2);
    for i in 0..2 {
        b.add_cost_entry(s, i, i, 1.0);
    }
    check("shifted psd", &b.build(), 2.0, 2.0);

    // min −x₁ − x₂ subject to [[1, x₁], [x₁, 1]] ⪰ 0, x₂ ≤ 1
    let mut b = ProgramBuilder::new();
    let z = b.add_psd(2);
    let x = b.add_free(2);
    let t = b.add_nonneg(1);
    b.add_cost(x.index(0), -1.0);
    b.add_cost(x.index(1), -1.0);
    for i in 0..2 {
        let mut row = RowBuilder::new();
        row.add_entry(z, i, i, 1.0);
        b.add_row(row, 1.0);
    }
    let mut row = RowBuilder::new();
    row.add_entry(z, 1, 0, 1.0).add(x.index(0), -1.0);
    b.add_row(row, 0.0);
    let mut row = RowBuilder::new();
    row.add(x.index(1), 1.0).add(t.index(0), 1.0);
    b.add_row(row, 1.0);
    check("disk and box", &b.build(), -2.0, 0.0);

    let pass = errors.is_empty() && duality_breaks == 0;
    r.line(9, pass, format!("solver examples: {} off, {duality_breaks} iterates break weak duality {}", errors.len(), errors.join("; ")));
}

fn timing(r: &mut Report) {
    // ln(39/5)/ln 2 = 2.9635...
    let hand = eotc(&[50, 100], &[5.0, 39.0])[0];
    let formula_ok = (hand - (39.0f64 / 5.0).ln() / 2f64.ln()).abs() < 1e-15 && (hand - 2.9635).abs() < 1e-4;
    let s = spectrum(&dendrite_curve(1000).unwrap(), 40).unwrap();
    let spec = AnisotropyProblemSpec::new(s, 40, ConstraintKind::Quadratic);
    let start = Instant::now();
    let rows = eotc_report(&spec, &[20, 30, 40]).unwrap();
    let finite = rows.iter().skip(1).all(|row| row.eotc.is_some_and(f64::is_finite));
    let values: Vec<String> = rows.iter().map(|row| format!("N={} {:.2}s eotc={:?}", row.modes, row.seconds, row.eotc.map(|e| (e * 100.0).round() / 100.0))).collect();
    r.line(
        10,
        finite && formula_ok,
        format!("eotc: {} (total {:.1} s), hand-checked formula {hand:.4}", values.join(", "), start.elapsed().as_secs_f64()),
    );
}

fn main() {
    let mut r = Report { failed: 0, solves: Vec::new() };
    kobayashi(&mut r);
    dendrite(&mut r);
    circle(&mut r);
    anisoperimetric(&mut r);
    ordering(&mut r);
    rank_and_gap(&mut r);
    cone_oracle(&mut r);
    wulff_area(&mut r);
    solver_suite(&mut r);
    timing(&mut r);
    println!("acceptance: {} of 10 criteria passed", 10 - r.failed);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
