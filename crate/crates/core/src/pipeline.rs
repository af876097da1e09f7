//! Optimal anisotropy of a curve.
//!
//! Writing `x = [Re σ; Im σ] ∈ ℝ^{2N}` and `α₀ = c₀, α_k = 2 Re c_k,
//! β₀ = 0, β_k = 2 Im c_k`, the interface energy is `L_σ(Γ) = αᵀx_Re + βᵀx_Im`
//! and the Wulff area is `|W_σ| = −xᵀP₀x` with
//! `P₀ = diag(−π, 2π(k² − 1)…; −π, 2π(k² − 1)…)`. Two problems are offered:
//!
//! * linear: minimize `L_σ(Γ)` over the cone with `σ₀ = 1`;
//! * quadratic: maximize `|W_σ|` over the cone with `L_σ(Γ) = L(Γ)`, solved
//!   through the enhanced relaxation and rescaled to `|W_σ| = 1`.
//!
//! In both, the first harmonic is fixed to zero. It changes neither the
//! energy of a closed curve (`c₁ = 0`) nor the Wulff area nor `σ + σ″`; it
//! only translates `W_σ`, and centring `W_σ` at its Steiner point keeps
//! `σ ≥ 0`.

use std::f64::consts::PI;
use std::time::Instant;

use conic::{solve, ConicProgram, ProgramBuilder, PsdBlock, RowBuilder, SolverOptions, VectorBlock};
use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::anisotropy::{anisoperimetric_ratio, interface_energy, AnisotropyFunction};
use crate::curve::{load_curve, CurveSpectrum, Point, PolygonalCurve};
use crate::error::{Error, Result};
use crate::qcqp::{extract_solution, relax, QcqpProblem, QuadraticForm, Relaxation, SolveSummary, TrigConstraint};
use crate::trigcone::diagonal_sum_rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Linear,
    Quadratic,
}

impl std::str::FromStr for ConstraintKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "quadratic" => Ok(Self::Quadratic),
            _ => Err(Error::Parse(format!("unknown constraint kind '{s}'"))),
        }
    }
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Quadratic => "quadratic",
        })
    }
}

/// Gap above which a quadratic-kind result is reported as uncertified.
pub const GAP_WARN: f64 = 1e-3;

pub const DEFAULT_MODES: usize = 50;
pub const DEFAULT_VERTICES: usize = 1000;

#[derive(Debug, Clone)]
pub struct AnisotropyProblemSpec {
    pub spectrum: CurveSpectrum,
    pub modes: usize,
    pub kind: ConstraintKind,
    pub options: SolverOptions,
}

impl AnisotropyProblemSpec {
    pub fn new(spectrum: CurveSpectrum, modes: usize, kind: ConstraintKind) -> Self {
        Self { spectrum, modes, kind, options: SolverOptions::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let min = match self.kind {
            ConstraintKind::Linear => 1,
            ConstraintKind::Quadratic => 2,
        };
        if self.modes < min {
            return Err(Error::InvalidProblem(format!("{} kind needs at least {min} modes", self.kind)));
        }
        if self.modes > self.spectrum.coefficients.len() {
            return Err(Error::ModeMismatch { needed: self.modes, available: self.spectrum.coefficients.len() });
        }
        let c0 = self.spectrum.coefficients[0].re;
        if !(c0 > 0.0) {
            return Err(Error::DegenerateSpectrum(c0));
        }
        Ok(())
    }

    /// `(α, β)` over the first `modes` coefficients.
    pub fn energy_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let c = &self.spectrum.coefficients[..self.modes];
        let alpha = c.iter().enumerate().map(|(k, c)| if k == 0 { c.re } else { 2.0 * c.re }).collect();
        let beta = c.iter().enumerate().map(|(k, c)| if k == 0 { 0.0 } else { 2.0 * c.im }).collect();
        (alpha, beta)
    }
}

/// `P₀` such that `xᵀP₀x = −|W_σ|`.
pub fn area_matrix(modes: usize) -> DMatrix<f64> {
    let d: Vec<f64> = (0..2 * modes)
        .map(|i| {
            let k = (i % modes) as f64;
            if k == 0.0 {
                -PI
            } else {
                2.0 * PI * (k * k - 1.0)
            }
        })
        .collect();
    DMatrix::from_diagonal(&DVector::from_vec(d))
}

/// Both cone constraints on `x = [Re σ; Im σ]`.
fn cone_constraints(modes: usize) -> Vec<TrigConstraint> {
    let re_index: Vec<usize> = (0..modes).collect();
    let im_index: Vec<Option<usize>> = (0..modes).map(|k| (k > 0).then_some(modes + k)).collect();
    vec![
        TrigConstraint { weights: vec![1.0; modes], re_index: re_index.clone(), im_index: im_index.clone() },
        TrigConstraint { weights: (0..modes).map(|k| 1.0 - (k * k) as f64).collect(), re_index, im_index },
    ]
}

/// Rows of `A` fixing `Im σ₀` and, when present, `σ₁` to zero.
fn gauge_rows(modes: usize) -> Vec<usize> {
    let mut idx = vec![modes];
    if modes >= 2 {
        idx.push(1);
        idx.push(modes + 1);
    }
    idx
}

/// The nonconvex problem `min xᵀP₀x` subject to `L_σ(Γ) = L(Γ)` and the cone,
/// and its enhanced relaxation.
pub fn build_quadratic(spec: &AnisotropyProblemSpec) -> Result<(QcqpProblem, Relaxation)> {
    if spec.kind != ConstraintKind::Quadratic {
        return Err(Error::InvalidProblem("build_quadratic needs the quadratic kind".into()));
    }
    spec.validate()?;
    let n = spec.modes;
    let (alpha, beta) = spec.energy_weights();
    let gauge = gauge_rows(n);
    let mut a = DMatrix::zeros(1 + gauge.len(), 2 * n);
    for k in 0..n {
        a[(0, k)] = alpha[k];
        a[(0, n + k)] = beta[k];
    }
    for (r, &i) in gauge.iter().enumerate() {
        a[(r + 1, i)] = 1.0;
    }
    let mut b = DVector::zeros(1 + gauge.len());
    b[0] = spec.spectrum.coefficients[0].re;
    let problem = QcqpProblem {
        objective: QuadraticForm::quadratic(area_matrix(n)),
        constraints: vec![],
        a,
        b,
        lmi: None,
        trig: cone_constraints(n),
    };
    let relaxation = relax(&problem)?;
    Ok((problem, relaxation))
}

/// Convex program `min αᵀx_Re + βᵀx_Im` subject to `σ₀ = 1` and the cone.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub program: ConicProgram,
    pub x: VectorBlock,
    pub f: PsdBlock,
    pub g: PsdBlock,
}

pub fn build_linear(spec: &AnisotropyProblemSpec) -> Result<LinearProgram> {
    if spec.kind != ConstraintKind::Linear {
        return Err(Error::InvalidProblem("build_linear needs the linear kind".into()));
    }
    spec.validate()?;
    let n = spec.modes;
    let (alpha, beta) = spec.energy_weights();
    let mut b = ProgramBuilder::new();
    let x = b.add_free(2 * n);
    for k in 0..n {
        b.add_cost(x.index(k), alpha[k]);
        b.add_cost(x.index(n + k), beta[k]);
    }
    let mut r = RowBuilder::new();
    r.add(x.index(0), 1.0);
    b.add_row(r, 1.0);
    for i in gauge_rows(n) {
        let mut r = RowBuilder::new();
        r.add(x.index(i), 1.0);
        b.add_row(r, 0.0);
    }
    let mut blocks = Vec::new();
    for c in cone_constraints(n) {
        let z = b.add_psd(2 * n);
        for (k, (mut re, im)) in diagonal_sum_rows(z, n).into_iter().enumerate() {
            re.add(x.index(c.re_index[k]), -c.weights[k]);
            b.add_row(re, 0.0);
            if let Some(mut im) = im {
                im.add(x.index(n + k), -c.weights[k]);
                b.add_row(im, 0.0);
            }
        }
        blocks.push(z);
    }
    Ok(LinearProgram { program: b.build(), x, f: blocks[0], g: blocks[1] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyResult {
    pub kind: ConstraintKind,
    pub modes: usize,
    /// Optimal anisotropy: `σ₀ = 1` (linear) or `|W_σ| = 1` (quadratic).
    pub sigma: AnisotropyFunction,
    /// Solver's `x = [Re σ; Im σ]` before normalization.
    pub raw_x: Vec<f64>,
    /// Optimal value of the convex program that was solved.
    pub objective: f64,
    /// `x̂ᵀP₀x̂` (quadratic kind).
    pub primal_objective: Option<f64>,
    pub gap: Option<f64>,
    pub rank_defect: Option<usize>,
    pub finsler_rho: Option<f64>,
    /// `Π_σ(Γ)`, absent when `|W_σ| ≤ 0`.
    pub ratio: Option<f64>,
    /// `L_σ̂(Γ)` of the raw solution.
    pub raw_energy: f64,
    pub certified: bool,
    pub solver: SolveSummary,
    pub seconds: f64,
}

impl AnisotropyResult {
    pub fn raw_sigma(&self) -> AnisotropyFunction {
        AnisotropyFunction::from_real_split(&self.raw_x).expect("raw_x has even length")
    }

    pub fn summary_line(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |v| format!("{v:.6e}"));
        format!(
            "objective={:.9e} gap={} rank_defect={} ratio={}",
            self.objective,
            opt(self.gap),
            self.rank_defect.map_or("none".to_string(), |r| r.to_string()),
            opt(self.ratio)
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn solve_anisotropy(spec: &AnisotropyProblemSpec) -> Result<AnisotropyResult> {
    let start = Instant::now();
    spec.validate()?;
    let spectrum = spec.spectrum.truncated(spec.modes)?;
    match spec.kind {
        ConstraintKind::Linear => {
            let lp = build_linear(spec)?;
            let res = solve(&lp.program, &spec.options)?;
            let summary = SolveSummary::from(&res);
            let res = res.into_optimal()?;
            let raw_x = lp.x.slice(&res.x).to_vec();
            let sigma = AnisotropyFunction::from_real_split(&raw_x)?;
            let raw_energy = interface_energy(&sigma, &spectrum)?;
            let ratio = anisoperimetric_ratio(&sigma, &spectrum).ok();
            Ok(AnisotropyResult {
                kind: spec.kind,
                modes: spec.modes,
                sigma,
                raw_x,
                objective: res.primal_objective,
                primal_objective: None,
                gap: None,
                rank_defect: None,
                finsler_rho: None,
                ratio,
                raw_energy,
                certified: true,
                solver: summary,
                seconds: start.elapsed().as_secs_f64(),
            })
        }
        ConstraintKind::Quadratic => {
            let (problem, relaxation) = build_quadratic(spec)?;
            info!("quadratic relaxation: {}", crate::qcqp::describe(&relaxation));
            let res = solve(&relaxation.program, &spec.options)?;
            let summary = SolveSummary::from(&res);
            let res = res.into_optimal()?;
            let sdr = extract_solution(&problem, &relaxation, &res, summary.clone());
            let raw = AnisotropyFunction::from_real_split(&sdr.x_hat)?;
            let area = raw.wulff_area();
            if !(area > 0.0) {
                return Err(Error::NonpositiveWulffArea(area));
            }
            let sigma = raw.scale(area.powf(-0.5))?;
            let gap = sdr.certificates.gap;
            let certified = gap.is_some_and(|g| g <= GAP_WARN);
            if !certified {
                warn!("relaxation gap {gap:?} exceeds {GAP_WARN:e}; the solution is not certified optimal");
            }
            Ok(AnisotropyResult {
                kind: spec.kind,
                modes: spec.modes,
                ratio: anisoperimetric_ratio(&sigma, &spectrum).ok(),
                raw_energy: interface_energy(&raw, &spectrum)?,
                sigma,
                primal_objective: Some(problem.objective_value(&sdr.x_hat)),
                raw_x: sdr.x_hat,
                objective: sdr.objective_value,
                gap,
                rank_defect: Some(sdr.certificates.rank_defect),
                finsler_rho: sdr.certificates.finsler_rho,
                certified,
                solver: summary,
                seconds: start.elapsed().as_secs_f64(),
            })
        }
    }
}

/// `ln(T_{k+1}/T_k) / ln(N_{k+1}/N_k)` for consecutive pairs.
pub fn eotc(modes: &[usize], seconds: &[f64]) -> Vec<f64> {
    modes
        .windows(2)
        .zip(seconds.windows(2))
        .map(|(n, t)| (t[1] / t[0]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EotcRow {
    pub modes: usize,
    pub seconds: f64,
    /// Exponent relative to the previous row.
    pub eotc: Option<f64>,
}

/// Times [`solve_anisotropy`] at each `N` in turn.
pub fn eotc_report(spec: &AnisotropyProblemSpec, mode_list: &[usize]) -> Result<Vec<EotcRow>> {
    if mode_list.len() < 2 || mode_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidProblem("mode list must be increasing with at least two entries".into()));
    }
    let mut seconds = Vec::new();
    for &n in mode_list {
        let s = AnisotropyProblemSpec { modes: n, ..spec.clone() };
        let start = Instant::now();
        solve_anisotropy(&s)?;
        seconds.push(start.elapsed().as_secs_f64());
        info!("eotc: N = {n} took {:.3} s", seconds.last().unwrap());
    }
    let e = eotc(mode_list, &seconds);
    Ok(mode_list
        .iter()
        .zip(&seconds)
        .enumerate()
        .map(|(i, (&modes, &seconds))| EotcRow { modes, seconds, eotc: (i > 0).then(|| e[i - 1]) })
        .collect())
}

pub fn eotc_csv(rows: &[EotcRow]) -> String {
    let mut out = String::from("N,seconds,eotc\n");
    for r in rows {
        let e = r.eotc.map_or(String::new(), |e| format!("{e:.6}"));
        out.push_str(&format!("{},{:.6},{}\n", r.modes, r.seconds, e));
    }
    out
}

/// Circle of radius `r` through `k` equispaced vertices.
pub fn circle_curve(r: f64, k: usize) -> Result<PolygonalCurve> {
    polar_curve(k, |_| r)
}

/// Star-shaped curve `r(u)(cos 2πu, sin 2πu)`, `u = j/k`.
pub fn polar_curve(k: usize, r: impl Fn(f64) -> f64) -> Result<PolygonalCurve> {
    let pts: Vec<Point> = (0..k)
        .map(|j| {
            let u = j as f64 / k as f64;
            let (s, c) = (2.0 * PI * u).sin_cos();
            let rr = r(u);
            [rr * c, rr * s]
        })
        .collect();
    load_curve(&pts)
}

/// `r(u) = 3 + exp(cos 18πu) cos 8πu`.
pub fn dendrite_curve(k: usize) -> Result<PolygonalCurve> {
    polar_curve(k, |u| 3.0 + (18.0 * PI * u).cos().exp() * (8.0 * PI * u).cos())
}

/// `∂W_σ` sampled at `k` uniform angles.
pub fn wulff_curve(sigma: &AnisotropyFunction, k: usize) -> Result<PolygonalCurve> {
    let pts: Vec<Point> = (0..k)
        .map(|j| {
            let nu = 2.0 * PI * j as f64 / k as f64;
            let (s, d) = (sigma.evaluate(nu), sigma.derivative(nu));
            let (sn, cs) = nu.sin_cos();
            [s * sn + d * cs, -s * cs + d * sn]
        })
        .collect();
    load_curve(&pts)
}

/// Best rotation of one anisotropy onto another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    /// `max_ν |σ(ν − θ) − μ(ν)| / max_ν |μ(ν)|` at the best `θ`.
    pub deviation: f64,
    pub theta: f64,
}

/// Compares `sigma` with `reference` after scaling both to unit Wulff area,
/// minimizing over `rotations` uniform angles and sampling `samples` angles.
pub fn aligned_deviation(
    sigma: &AnisotropyFunction,
    reference: &AnisotropyFunction,
    rotations: usize,
    samples: usize,
) -> Result<Alignment> {
    let s = sigma.normalized_area()?;
    let m = reference.normalized_area()?;
    let nus: Vec<f64> = (0..samples).map(|i| 2.0 * PI * i as f64 / samples as f64).collect();
    let mv: Vec<f64> = nus.iter().map(|&v| m.evaluate(v)).collect();
    let mmax = mv.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut best = Alignment { deviation: f64::INFINITY, theta: 0.0 };
    for j in 0..rotations {
        let theta = 2.0 * PI * j as f64 / rotations as f64;
        let r = s.rotated(theta);
        let dev = nus.iter().zip(&mv).map(|(&v, mu)| (r.evaluate(v) - mu).abs()).fold(0.0f64, f64::max) / mmax;
        if dev < best.deviation {
            best = Alignment { deviation: dev, theta };
        }
    }
    Ok(best)
}
