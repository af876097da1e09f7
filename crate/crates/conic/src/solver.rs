//! Homogeneous self-dual interior-point method.
//!
//! The program `min cᵀx, Ax = b, x ∈ K` and its dual `max bᵀy, Aᵀy + s = c,
//! s ∈ K*` are embedded in the homogeneous system
//!
//! ```txt
//!     A x − b τ         = 0
//!     c τ − Aᵀ y − s    = 0
//!     κ + cᵀx − bᵀy     = 0,     x, s ∈ K,  τ, κ ≥ 0
//! ```
//!
//! which is solved by an infeasible-start path-following method with
//! Nesterov–Todd scaling and Mehrotra's predictor-corrector. Optimal
//! solutions are recovered as `(x, y, s)/τ`; when `τ → 0` the iterates
//! converge to a Farkas certificate of primal or dual infeasibility.
//!
//! Linear algebra is dense. Without free variables the Newton system is
//! solved in scaled coordinates through a QR factorization of the scaled
//! rows `Rᵀ A_i R`, which avoids squaring the condition number of the Schur
//! complement `A G⁻¹ Aᵀ`; near the optimum that condition number easily
//! exceeds 1/ε when some blocks are inactive. With free variables the Schur
//! complement is formed, augmented with their columns and LU-factored.
//! Either factorization is computed once per iteration and serves the
//! predictor, the corrector and iterative refinement. `b` and `c` are
//! normalized internally and the dual step `ds` is taken from the dual
//! equation, so dual feasibility improves even when the complementarity
//! equation is solved inexactly.

use std::f64::consts::FRAC_1_SQRT_2;

use log::{debug, warn};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, LU};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::linalg::{dot, norm, smat, svec, svec_into};
use crate::presolve::independent_rows;
use crate::program::{svec_len, Cone, ConicProgram, SparseRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target for the relative primal/dual residuals and duality gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
    /// Fraction of the distance to the cone boundary taken by each step.
    pub step_fraction: f64,
    /// Static diagonal regularization of the reduced Newton system.
    pub regularization: f64,
    /// Residual level below which a stalled run is still reported as
    /// [`Status::Inaccurate`] instead of a numerical failure.
    pub reduced_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, verbose: false, step_fraction: 0.99, regularization: 1e-10, reduced_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    /// Progress stalled short of `tol` with every residual below `reduced_tol`.
    Inaccurate,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖Az − b‖ / (1 + ‖b‖)`
    pub primal: f64,
    /// `‖Aᵀy + s − c‖ / (1 + ‖c‖)`
    pub dual: f64,
    /// `|cᵀz − bᵀy| / (1 + |cᵀz| + |bᵀy|)`
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// State of one iterate, in the units of the original program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iter: usize,
    pub mu: f64,
    pub pres: f64,
    pub dres: f64,
    pub gap: f64,
    pub pobj: f64,
    pub dobj: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
}

impl std::fmt::Display for IterationLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "iter {}: mu={:.3e} pres={:.3e} dres={:.3e} gap={:.3e} pobj={:.9e} dobj={:.9e} tau={:.3e} kappa={:.3e} step={:.3}",
            self.iter, self.mu, self.pres, self.dres, self.gap, self.pobj, self.dobj, self.tau, self.kappa, self.step
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub status: Status,
    /// Primal point (or an unboundedness ray normalized to `cᵀx = −1`).
    pub x: Vec<f64>,
    /// Equality multipliers (or an infeasibility certificate with `bᵀy = 1`).
    pub y: Vec<f64>,
    /// Dual slack `c − Aᵀy`.
    pub s: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub residuals: Residuals,
    pub history: Vec<IterationLog>,
    /// Equality rows removed by presolve as linearly dependent.
    pub dropped_rows: Vec<usize>,
}

impl SolverResult {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Turns every status other than `Optimal` and `Inaccurate` into the
    /// matching error.
    pub fn into_optimal(self) -> Result<Self, SolverError> {
        match self.status {
            Status::Optimal | Status::Inaccurate => Ok(self),
            Status::Infeasible => Err(SolverError::Infeasible),
            Status::Unbounded => Err(SolverError::Unbounded),
            Status::MaxIter => Err(SolverError::MaxIterations(self.iterations)),
            Status::NumericalFailure => Err(SolverError::NumericalFailure(format!(
                "stopped after {} iterations with residuals {:.2e}/{:.2e}/{:.2e}",
                self.iterations, self.residuals.primal, self.residuals.dual, self.residuals.gap
            ))),
        }
    }
}

/// Recomputes the relative residuals of `(x, y, s)` against `program`.
pub fn residuals(program: &ConicProgram, result: &SolverResult) -> Residuals {
    compute_residuals(program, &result.x, &result.y, &result.s)
}

fn compute_residuals(program: &ConicProgram, x: &[f64], y: &[f64], s: &[f64]) -> Residuals {
    let ax = program.apply(x);
    let rp: Vec<f64> = ax.iter().zip(&program.rhs).map(|(a, b)| a - b).collect();
    let aty = program.apply_transpose(y);
    let rd: Vec<f64> = aty.iter().zip(s).zip(&program.cost).map(|((a, s), c)| a + s - c).collect();
    let pobj = dot(&program.cost, x);
    let dobj = dot(&program.rhs, y);
    Residuals {
        primal: norm(&rp) / (1.0 + norm(&program.rhs)),
        dual: norm(&rd) / (1.0 + norm(&program.cost)),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
    }
}

/// Solves `program` to the accuracy requested in `options`.
///
/// Only malformed input is reported as an error; every other outcome is
/// described by [`SolverResult::status`].
pub fn solve(program: &ConicProgram, options: &SolverOptions) -> Result<SolverResult, SolverError> {
    program.validate()?;
    if !(options.tol > 0.0) || !(options.step_fraction > 0.0 && options.step_fraction < 1.0) {
        return Err(SolverError::Malformed("tol must be positive and step_fraction in (0, 1)".into()));
    }
    let selection = independent_rows(program, 1e-13);
    let mut engine = Engine::new(program, &selection.keep, options);
    let mut result = engine.run();
    if selection.inconsistent && result.status == Status::Optimal {
        // the dropped rows cannot be satisfied by any point meeting the kept ones
        result.status = Status::Infeasible;
    }
    result.dropped_rows = selection.dropped;
    Ok(result)
}

struct PsdData {
    offset: usize,
    dim: usize,
    /// Working rows that touch this block.
    rows: Vec<usize>,
    /// Per touched row: `(p, q, coef)` with `p ≥ q`, where `coef` multiplies
    /// the svec coordinate of entry `(p, q)`.
    terms: Vec<Vec<(usize, usize, f64)>>,
}

struct Layout {
    n: usize,
    m: usize,
    psd: Vec<PsdData>,
    /// Orthant variables and their columns `(row, coef)`.
    nonneg: Vec<(usize, Vec<(usize, f64)>)>,
    /// Free variables and their columns.
    free: Vec<(usize, Vec<(usize, f64)>)>,
    is_free: Vec<bool>,
    degree: usize,
}

impl Layout {
    fn new(cones: &[Cone], rows: &[SparseRow], n: usize) -> Self {
        let m = rows.len();
        let mut psd = Vec::new();
        let mut owner = vec![usize::MAX; n];
        let mut kind = vec![0u8; n];
        let mut local = vec![(0usize, 0usize); n];
        let mut offset = 0;
        let mut degree = 0;
        for cone in cones {
            match *cone {
                Cone::Free(d) => {
                    for v in offset..offset + d {
                        kind[v] = 0;
                    }
                }
                Cone::Nonneg(d) => {
                    for v in offset..offset + d {
                        kind[v] = 1;
                    }
                }
                Cone::Psd(d) => {
                    let id = psd.len();
                    let mut k = offset;
                    for j in 0..d {
                        for i in j..d {
                            kind[k] = 2;
                            owner[k] = id;
                            local[k] = (i, j);
                            k += 1;
                        }
                    }
                    psd.push(PsdData { offset, dim: d, rows: Vec::new(), terms: Vec::new() });
                }
            }
            degree += cone.degree();
            offset += cone.scalar_dim();
        }
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for (&v, &a) in row.idx.iter().zip(&row.val) {
                if kind[v] == 2 {
                    let blk = &mut psd[owner[v]];
                    if blk.rows.last() != Some(&r) {
                        blk.rows.push(r);
                        blk.terms.push(Vec::new());
                    }
                    let (p, q) = local[v];
                    blk.terms.last_mut().unwrap().push((p, q, a));
                } else {
                    cols[v].push((r, a));
                }
            }
        }
        let mut nonneg = Vec::new();
        let mut free = Vec::new();
        for (v, col) in cols.into_iter().enumerate() {
            match kind[v] {
                0 => free.push((v, col)),
                1 => nonneg.push((v, col)),
                _ => {}
            }
        }
        let is_free = kind.iter().map(|&k| k == 0).collect();
        Layout { n, m, psd, nonneg, free, is_free, degree }
    }
}

/// Nesterov–Todd scaling of one PSD block: `R⁻¹ X R⁻ᵀ = Rᵀ S R = Λ`.
struct PsdScale {
    r: DMatrix<f64>,
    rinv: DMatrix<f64>,
    /// `W = R Rᵀ`, satisfying `W S W = X`.
    w: DMatrix<f64>,
    /// `W⁻¹ = R⁻ᵀ R⁻¹`.
    winv: DMatrix<f64>,
    lam: Vec<f64>,
}

impl PsdScale {
    fn new(x: DMatrix<f64>, s: DMatrix<f64>) -> Option<Self> {
        let lx = Cholesky::new(x)?.l();
        let ls = Cholesky::new(s)?.l();
        let svd = (ls.transpose() * &lx).svd(true, true);
        let u = svd.u?;
        let v = svd.v_t?.transpose();
        let lam: Vec<f64> = svd.singular_values.iter().cloned().collect();
        if lam.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return None;
        }
        let mut r = lx * v;
        for (j, l) in lam.iter().enumerate() {
            r.column_mut(j).scale_mut(1.0 / l.sqrt());
        }
        let mut rinv = u.transpose() * ls.transpose();
        for (i, l) in lam.iter().enumerate() {
            rinv.row_mut(i).scale_mut(1.0 / l.sqrt());
        }
        let w = &r * r.transpose();
        let winv = rinv.transpose() * &rinv;
        Some(Self { r, rinv, w, winv, lam })
    }

    /// `R⁻¹ V R⁻ᵀ`
    fn to_scaled(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        &self.rinv * v * self.rinv.transpose()
    }

    /// `Rᵀ V R`
    fn to_scaled_dual(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        self.r.transpose() * v * &self.r
    }

    /// `R⁻ᵀ V R⁻¹`
    fn from_scaled_dual(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        self.rinv.transpose() * v * &self.rinv
    }
}

struct Scaling {
    psd: Vec<PsdScale>,
    /// Orthant weights `x/s` and `λ = √(xs)`, indexed like `Layout::nonneg`.
    ratio: Vec<f64>,
    lam: Vec<f64>,
}

/// Right-hand side of the linearized complementarity in scaled space,
/// already divided by `λ`: `dx̃ + ds̃ = U`.
struct ComplementarityRhs {
    psd: Vec<DMatrix<f64>>,
    nonneg: Vec<f64>,
}

/// Scaled components of a direction, kept for the corrector.
struct ScaledDirection {
    psd: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    nonneg: Vec<(f64, f64)>,
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
    scaled: ScaledDirection,
}

enum KktKind {
    Ortho(OrthoFactor),
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

struct KktFactor {
    kind: KktKind,
    /// Diagonal scaling applied before factoring.
    d: Vec<f64>,
}

/// `Ãᵀ = Q T` for the scaled rows `Ã_i = Rᵀ A_i R` (orthant: `a √(x/s)`),
/// with `Q = diag(Q_b) Q_f` from one QR per cone block followed by a QR of
/// the stacked block factors.
struct OrthoFactor {
    /// Per PSD block: its `Q_b` and offset in the stacked system.
    blocks: Vec<(DMatrix<f64>, usize)>,
    /// Offset of the orthant rows in the stacked system.
    nonneg_at: usize,
    q_final: DMatrix<f64>,
    t: DMatrix<f64>,
}

impl KktFactor {
    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let scaled = DVector::from_iterator(rhs.len(), rhs.iter().zip(&self.d).map(|(r, d)| r * d));
        let sol = match &self.kind {
            KktKind::Ortho(_) => return None,
            KktKind::Chol(ch) => ch.solve(&scaled),
            KktKind::Lu(lu) => lu.solve(&scaled)?,
        };
        Some(DVector::from_iterator(sol.len(), sol.iter().zip(&self.d).map(|(v, d)| v * d)))
    }
}

struct Engine<'a> {
    original: &'a ConicProgram,
    keep: Vec<usize>,
    /// Kept rows scaled to unit norm.
    rows: Vec<SparseRow>,
    row_scale: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// Working `b` and `c` are the normalized ones divided by these.
    b_scale: f64,
    c_scale: f64,
    layout: Layout,
    options: SolverOptions,
}

impl<'a> Engine<'a> {
    fn new(program: &'a ConicProgram, keep: &[usize], options: &SolverOptions) -> Self {
        let mut rows = Vec::with_capacity(keep.len());
        let mut row_scale = Vec::with_capacity(keep.len());
        let mut b = Vec::with_capacity(keep.len());
        for &r in keep {
            let row = &program.rows[r];
            let d = 1.0 / row.norm();
            rows.push(SparseRow { idx: row.idx.clone(), val: row.val.iter().map(|v| v * d).collect() });
            row_scale.push(d);
            b.push(program.rhs[r] * d);
        }
        let n = program.num_vars();
        let layout = Layout::new(&program.cones, &rows, n);
        let unit = |v: f64| if v > 0.0 && v.is_finite() { v } else { 1.0 };
        let b_scale = unit(norm(&b));
        let c_scale = unit(norm(&program.cost));
        Engine {
            original: program,
            keep: keep.to_vec(),
            rows,
            row_scale,
            b: b.iter().map(|v| v / b_scale).collect(),
            c: program.cost.iter().map(|v| v / c_scale).collect(),
            b_scale,
            c_scale,
            layout,
            options: *options,
        }
    }

    fn a_apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(v)).collect()
    }

    fn at_apply(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.n];
        for (row, &yi) in self.rows.iter().zip(y) {
            for (&j, &v) in row.idx.iter().zip(&row.val) {
                out[j] += v * yi;
            }
        }
        out
    }

    /// Multipliers of the original rows from working multipliers.
    fn unscale_y(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.original.rows.len()];
        for (k, &r) in self.keep.iter().enumerate() {
            out[r] = y[k] * self.row_scale[k] * self.c_scale;
        }
        out
    }

    /// `(x, y, s)/τ` in the units of the original program.
    fn unscale(&self, x: &[f64], y: &[f64], s: &[f64], tau: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            x.iter().map(|v| v * self.b_scale / tau).collect(),
            self.unscale_y(y).iter().map(|v| v / tau).collect(),
            s.iter().map(|v| v * self.c_scale / tau).collect(),
        )
    }

    fn identity_point(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.layout.n];
        for blk in &self.layout.psd {
            for i in 0..blk.dim {
                e[blk.offset + crate::program::svec_index(blk.dim, i, i)] = 1.0;
            }
        }
        for (v, _) in &self.layout.nonneg {
            e[*v] = 1.0;
        }
        e
    }

    /// Smallest eigenvalue over all cone blocks of `z`.
    fn cone_margin(&self, z: &[f64]) -> f64 {
        let mut low = f64::INFINITY;
        for blk in &self.layout.psd {
            let len = svec_len(blk.dim);
            low = low.min(crate::linalg::min_eigenvalue(&smat(&z[blk.offset..blk.offset + len], blk.dim)));
        }
        for (v, _) in &self.layout.nonneg {
            low = low.min(z[*v]);
        }
        low
    }

    /// `z` with every cone block's eigenvalues raised to at least `floor`,
    /// together with the smallest eigenvalue of `z`.
    fn lift_to_floor(&self, z: &[f64], floor: f64) -> (Vec<f64>, f64) {
        let mut out = z.to_vec();
        let mut low = f64::INFINITY;
        for blk in &self.layout.psd {
            let len = svec_len(blk.dim);
            let eig = SymmetricEigen::new(smat(&z[blk.offset..blk.offset + len], blk.dim));
            low = low.min(eig.eigenvalues.min());
            let lifted = DVector::from_iterator(blk.dim, eig.eigenvalues.iter().map(|l| l.max(floor)));
            let m = &eig.eigenvectors * DMatrix::from_diagonal(&lifted) * eig.eigenvectors.transpose();
            svec_into(&m, &mut out[blk.offset..blk.offset + len]);
        }
        for (v, _) in &self.layout.nonneg {
            low = low.min(z[*v]);
            out[*v] = z[*v].max(floor);
        }
        (out, low)
    }

    /// Alternating projections between an affine set and `{z : z ⪰ 2·margin·e}`,
    /// starting from `project(e)`. Returns the first projected point whose
    /// cone blocks clear `margin`, or `None` once the distance between the two
    /// sets stops shrinking (no interior point, or too slow to be worth it).
    fn refine_start<F>(&self, e: &[f64], margin: f64, project: F) -> Option<(Vec<f64>, Vec<f64>)>
    where
        F: Fn(&[f64]) -> Option<(Vec<f64>, Vec<f64>)>,
    {
        const MAX_ROUNDS: usize = 200;
        let mut cur = project(e)?;
        let mut last = f64::INFINITY;
        for _ in 0..MAX_ROUNDS {
            let (target, low) = self.lift_to_floor(&cur.1, 2.0 * margin);
            if low >= margin {
                return Some(cur);
            }
            let next = project(&target)?;
            let dist = norm(&next.1.iter().zip(&target).map(|(a, b)| a - b).collect::<Vec<_>>());
            if !dist.is_finite() || dist > 0.999 * last {
                return None;
            }
            last = dist;
            cur = next;
        }
        None
    }

    /// Starting point `(x, y, s)`.
    ///
    /// The primal start is a point of `{Ax = b}` and the dual start a slack
    /// `c − Aᵀy` with free coordinates matched exactly, each found from the
    /// cone identity `e` by alternating projections. A side whose search ends
    /// well inside the cone keeps all later iterates feasible on that side;
    /// otherwise it falls back to `e` (with `y = 0`).
    fn initial_point(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        const MARGIN: f64 = 1e-2;
        let e = self.identity_point();
        let m = self.layout.m;
        let mut x = e.clone();
        let mut y = vec![0.0; m];
        let mut s = e.clone();
        if m == 0 {
            if self.cone_margin(&self.c) >= MARGIN && self.layout.free.iter().all(|(v, _)| self.c[*v] == 0.0) {
                s = self.c.clone();
            }
            return (x, y, s);
        }

        let gram = DMatrix::from_fn(m, m, |i, j| self.rows[i].dot_row(&self.rows[j]));
        if let Some(ch) = Cholesky::new(gram) {
            // nearest point of {Ax = b}
            let project = |z: &[f64]| {
                let az = self.a_apply(z);
                let r = DVector::from_iterator(m, self.b.iter().zip(&az).map(|(b, a)| b - a));
                let corr = self.at_apply(ch.solve(&r).as_slice());
                Some((Vec::new(), z.iter().zip(&corr).map(|(a, b)| a + b).collect()))
            };
            if let Some((_, cand)) = self.refine_start(&e, MARGIN, project) {
                x = cand;
            }
        }

        // min ‖(c − Aᵀy − z)_K‖ subject to (Aᵀy)_f = c_f
        let cone_rows: Vec<SparseRow> = self
            .rows
            .iter()
            .map(|r| {
                let (idx, val) = r.idx.iter().zip(&r.val).filter(|(i, _)| !self.layout.is_free[**i]).map(|(i, v)| (*i, *v)).unzip();
                SparseRow { idx, val }
            })
            .collect();
        let nf = self.layout.free.len();
        let mut k = DMatrix::zeros(m + nf, m + nf);
        for i in 0..m {
            for j in 0..=i {
                let g = cone_rows[i].dot_row(&cone_rows[j]);
                k[(i, j)] = g;
                k[(j, i)] = g;
            }
        }
        let diag_max = (0..m).map(|i| k[(i, i)]).fold(1.0, f64::max);
        for i in 0..m {
            k[(i, i)] += 1e-12 * diag_max;
        }
        for (f, (_, col)) in self.layout.free.iter().enumerate() {
            for &(r, a) in col {
                k[(r, m + f)] = a;
                k[(m + f, r)] = a;
            }
        }
        let lu = LU::new(k);
        let c_norm = norm(&self.c);
        let project = |z: &[f64]| {
            let target: Vec<f64> = (0..self.layout.n).map(|i| if self.layout.is_free[i] { 0.0 } else { self.c[i] - z[i] }).collect();
            let mut rhs = DVector::zeros(m + nf);
            for i in 0..m {
                rhs[i] = cone_rows[i].dot(&target);
            }
            for (f, (v, _)) in self.layout.free.iter().enumerate() {
                rhs[m + f] = self.c[*v];
            }
            let sol = lu.solve(&rhs)?;
            let cand_y: Vec<f64> = sol.rows(0, m).iter().cloned().collect();
            let aty = self.at_apply(&cand_y);
            let mut cand_s: Vec<f64> = self.c.iter().zip(&aty).map(|(c, a)| c - a).collect();
            let free_err = self.layout.free.iter().map(|(v, _)| cand_s[*v].abs()).fold(0.0, f64::max);
            for (v, _) in &self.layout.free {
                cand_s[*v] = 0.0;
            }
            (cand_y.iter().all(|v| v.is_finite()) && free_err <= 1e-10 * (1.0 + c_norm)).then_some((cand_y, cand_s))
        };
        if let Some((cand_y, cand_s)) = self.refine_start(&e, MARGIN, project) {
            y = cand_y;
            s = cand_s;
        }
        (x, y, s)
    }

    fn cone_dot(&self, x: &[f64], s: &[f64]) -> f64 {
        x.iter().zip(s).zip(&self.layout.is_free).filter(|(_, f)| !**f).map(|((a, b), _)| a * b).sum()
    }

    fn scaling(&self, x: &[f64], s: &[f64]) -> Option<Scaling> {
        let psd = self
            .layout
            .psd
            .iter()
            .map(|blk| {
                let len = svec_len(blk.dim);
                let xm = smat(&x[blk.offset..blk.offset + len], blk.dim);
                let sm = smat(&s[blk.offset..blk.offset + len], blk.dim);
                PsdScale::new(xm, sm)
            })
            .collect::<Option<Vec<_>>>()?;
        let mut ratio = Vec::with_capacity(self.layout.nonneg.len());
        let mut lam = Vec::with_capacity(self.layout.nonneg.len());
        for (v, _) in &self.layout.nonneg {
            if !(x[*v] > 0.0 && s[*v] > 0.0) {
                return None;
            }
            ratio.push(x[*v] / s[*v]);
            lam.push((x[*v] * s[*v]).sqrt());
        }
        Some(Scaling { psd, ratio, lam })
    }

    /// `G⁻¹ v` on cone coordinates, zero on free ones.
    fn ginv_apply(&self, sc: &Scaling, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.n];
        for (blk, ps) in self.layout.psd.iter().zip(&sc.psd) {
            let len = svec_len(blk.dim);
            let vm = smat(&v[blk.offset..blk.offset + len], blk.dim);
            let r = &ps.w * vm * &ps.w;
            svec_into(&r, &mut out[blk.offset..blk.offset + len]);
        }
        for ((var, _), g) in self.layout.nonneg.iter().zip(&sc.ratio) {
            out[*var] = g * v[*var];
        }
        out
    }

    /// `G v` on cone coordinates, zero on free ones.
    fn g_apply(&self, sc: &Scaling, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.n];
        for (blk, ps) in self.layout.psd.iter().zip(&sc.psd) {
            let len = svec_len(blk.dim);
            let vm = smat(&v[blk.offset..blk.offset + len], blk.dim);
            let r = &ps.winv * vm * &ps.winv;
            svec_into(&r, &mut out[blk.offset..blk.offset + len]);
        }
        for ((var, _), g) in self.layout.nonneg.iter().zip(&sc.ratio) {
            out[*var] = v[*var] / g;
        }
        out
    }

    /// Schur complement `A G⁻¹ Aᵀ` over the cone variables.
    fn schur(&self, sc: &Scaling) -> DMatrix<f64> {
        let m = self.layout.m;
        let mut big = DMatrix::zeros(m, m);
        for (blk, ps) in self.layout.psd.iter().zip(&sc.psd) {
            let cols = schur_psd_columns(blk, &ps.w);
            for (jt, col) in cols.iter().enumerate() {
                let j = blk.rows[jt];
                for (it, v) in col.iter().enumerate() {
                    big[(blk.rows[it], j)] += v;
                }
            }
        }
        for ((_, col), g) in self.layout.nonneg.iter().zip(&sc.ratio) {
            for &(r1, a1) in col {
                for &(r2, a2) in col {
                    big[(r1, r2)] += g * a1 * a2;
                }
            }
        }
        let t = big.transpose();
        (big + t) * 0.5
    }

    /// Orthogonal factorization of the scaled rows, so that the Schur
    /// complement is never formed and its condition number is not squared.
    /// Each cone block is reduced by its own QR first, since it only meets
    /// the rows that touch it.
    fn orthogonal_factor(&self, sc: &Scaling) -> Option<OrthoFactor> {
        let m = self.layout.m;
        let reduced: Vec<(&PsdData, DMatrix<f64>, DMatrix<f64>)> = self
            .layout
            .psd
            .iter()
            .zip(&sc.psd)
            .map(|(blk, ps)| {
                let qr = scaled_psd_rows(blk, &ps.r).qr();
                (blk, qr.q(), qr.r())
            })
            .collect();
        let nrows = reduced.iter().map(|(_, _, r)| r.nrows()).sum::<usize>() + self.layout.nonneg.len();
        if nrows < m {
            return None;
        }
        let mut stack = DMatrix::zeros(nrows, m);
        let mut blocks = Vec::with_capacity(reduced.len());
        let mut at = 0;
        for (blk, q, r) in reduced {
            for i in 0..r.nrows() {
                for (j, &row) in blk.rows.iter().enumerate() {
                    stack[(at + i, row)] = r[(i, j)];
                }
            }
            blocks.push((q, at));
            at += r.nrows();
        }
        let nonneg_at = at;
        for ((_, col), g) in self.layout.nonneg.iter().zip(&sc.ratio) {
            let w = g.sqrt();
            for &(row, a) in col {
                stack[(at, row)] = a * w;
            }
            at += 1;
        }
        let qr = stack.qr();
        let t = qr.r();
        let diag: Vec<f64> = (0..m).map(|i| t[(i, i)].abs()).collect();
        let top = diag.iter().cloned().fold(0.0, f64::max);
        if !(top > 0.0) || diag.iter().any(|d| !(*d > 1e-15 * top)) {
            return None;
        }
        Some(OrthoFactor { blocks, nonneg_at, q_final: qr.q(), t })
    }

    /// `Rᵀ v R` per PSD block and `v √(x/s)` on the orthant.
    fn to_scaled_dual_vec(&self, sc: &Scaling, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.n];
        for (blk, ps) in self.layout.psd.iter().zip(&sc.psd) {
            let len = svec_len(blk.dim);
            let m = ps.to_scaled_dual(&smat(&v[blk.offset..blk.offset + len], blk.dim));
            svec_into(&m, &mut out[blk.offset..blk.offset + len]);
        }
        for ((var, _), g) in self.layout.nonneg.iter().zip(&sc.ratio) {
            out[*var] = v[*var] * g.sqrt();
        }
        out
    }

    /// Inverse of the primal scaling: `R p̃ Rᵀ` and `p̃ √(x/s)`.
    fn from_scaled_primal_vec(&self, sc: &Scaling, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.n];
        for (blk, ps) in self.layout.psd.iter().zip(&sc.psd) {
            let len = svec_len(blk.dim);
            let m = &ps.r * smat(&v[blk.offset..blk.offset + len], blk.dim) * ps.r.transpose();
            svec_into(&m, &mut out[blk.offset..blk.offset + len]);
        }
        for ((var, _), g) in self.layout.nonneg.iter().zip(&sc.ratio) {
            out[*var] = v[*var] * g.sqrt();
        }
        out
    }

    /// `Qᵀ v` for a scaled vector `v`.
    fn ortho_qt(&self, of: &OrthoFactor, v: &[f64]) -> DVector<f64> {
        let mut z = DVector::zeros(of.q_final.nrows());
        for (blk, (q, at)) in self.layout.psd.iter().zip(&of.blocks) {
            let len = svec_len(blk.dim);
            let piece = q.tr_mul(&DVector::from_column_slice(&v[blk.offset..blk.offset + len]));
            z.rows_mut(*at, piece.len()).copy_from(&piece);
        }
        for (k, (var, _)) in self.layout.nonneg.iter().enumerate() {
            z[of.nonneg_at + k] = v[*var];
        }
        of.q_final.tr_mul(&z)
    }

    /// `Q y` as a scaled vector.
    fn ortho_q(&self, of: &OrthoFactor, y: &DVector<f64>) -> Vec<f64> {
        let z = &of.q_final * y;
        let mut out = vec![0.0; self.layout.n];
        for (blk, (q, at)) in self.layout.psd.iter().zip(&of.blocks) {
            let len = svec_len(blk.dim);
            let piece = q * z.rows(*at, q.ncols());
            out[blk.offset..blk.offset + len].copy_from_slice(piece.as_slice());
        }
        for (k, (var, _)) in self.layout.nonneg.iter().enumerate() {
            out[*var] = z[of.nonneg_at + k];
        }
        out
    }

    /// Factors the reduced system after symmetric diagonal scaling to a
    /// unit Schur diagonal; the rows of different blocks can differ in scale
    /// by many orders of magnitude near the optimum.
    fn factor(&self, sc: &Scaling) -> Option<KktFactor> {
        let m = self.layout.m;
        let nf = self.layout.free.len();
        if nf == 0 {
            if let Some(of) = self.orthogonal_factor(sc) {
                return Some(KktFactor { kind: KktKind::Ortho(of), d: vec![1.0; m] });
            }
        }
        let schur = self.schur(sc);
        let mut d: Vec<f64> = (0..m).map(|i| {
            let v = schur[(i, i)];
            if v > 0.0 && v.is_finite() { 1.0 / v.sqrt() } else { 1.0 }
        }).collect();
        d.extend(std::iter::repeat(1.0).take(nf));
        let mut base = DMatrix::zeros(m + nf, m + nf);
        for j in 0..m {
            for i in 0..m {
                base[(i, j)] = schur[(i, j)] * d[i] * d[j];
            }
        }
        for (f, (_, col)) in self.layout.free.iter().enumerate() {
            for &(r, a) in col {
                base[(r, m + f)] = a * d[r];
                base[(m + f, r)] = a * d[r];
            }
        }
        // unregularized first; refinement recovers accuracy lost to the shift
        let mut reg = 0.0;
        for attempt in 0..9 {
            if attempt == 1 {
                reg = self.options.regularization;
            }
            let mut k = base.clone();
            for i in 0..m {
                k[(i, i)] += reg;
            }
            for i in m..m + nf {
                k[(i, i)] = -reg;
            }
            if nf == 0 {
                if let Some(ch) = Cholesky::new(k) {
                    return Some(KktFactor { kind: KktKind::Chol(ch), d });
                }
            } else {
                let lu = LU::new(k);
                if lu.is_invertible() {
                    return Some(KktFactor { kind: KktKind::Lu(lu), d });
                }
            }
            if attempt > 0 {
                warn!("reduced Newton system singular; raising regularization to {:.1e}", reg * 100.0);
                reg *= 100.0;
            }
        }
        None
    }

    /// Solves `G p − Aᵀq = r` (free rows: `−(Aᵀq)_f = r_f`), `A p = t`.
    fn kkt_solve(&self, sc: &Scaling, fac: &KktFactor, r: &[f64], t: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let (mut p, mut q) = self.kkt_solve_once(sc, fac, r, t)?;
        // the orthogonal path measures the first block row in scaled space
        let measure = |e: &[f64]| match fac.kind {
            KktKind::Ortho(_) => norm(&self.to_scaled_dual_vec(sc, e)),
            _ => norm(e),
        };
        let scale = 1.0 + measure(r) + norm(t);
        let mut last = f64::INFINITY;
        for _ in 0..10 {
            let atq = self.at_apply(&q);
            let gp = self.g_apply(sc, &p);
            let e1: Vec<f64> = (0..self.layout.n)
                .map(|i| if self.layout.is_free[i] { r[i] + atq[i] } else { r[i] - gp[i] + atq[i] })
                .collect();
            let ap = self.a_apply(&p);
            let e2: Vec<f64> = t.iter().zip(&ap).map(|(a, b)| a - b).collect();
            let err = measure(&e1) + norm(&e2);
            if err <= 1e-14 * scale || err >= 0.5 * last {
                break;
            }
            last = err;
            let (dp, dq) = self.kkt_solve_once(sc, fac, &e1, &e2)?;
            p.iter_mut().zip(&dp).for_each(|(a, b)| *a += b);
            q.iter_mut().zip(&dq).for_each(|(a, b)| *a += b);
        }
        Some((p, q))
    }

    fn kkt_solve_once(&self, sc: &Scaling, fac: &KktFactor, r: &[f64], t: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        if let KktKind::Ortho(of) = &fac.kind {
            // p̃ = r̃ + Q(T⁻ᵀt − Qᵀr̃), q = T⁻¹(T⁻ᵀt − Qᵀr̃)
            let rs = self.to_scaled_dual_vec(sc, r);
            let w = of.t.tr_solve_upper_triangular(&DVector::from_column_slice(t))? - self.ortho_qt(of, &rs);
            let q = of.t.solve_upper_triangular(&w)?;
            let corr = self.ortho_q(of, &w);
            let ps: Vec<f64> = rs.iter().zip(&corr).map(|(a, b)| a + b).collect();
            let p = self.from_scaled_primal_vec(sc, &ps);
            if p.iter().chain(q.iter()).any(|v| !v.is_finite()) {
                return None;
            }
            return Some((p, q.iter().cloned().collect()));
        }
        let m = self.layout.m;
        let nf = self.layout.free.len();
        let u = self.ginv_apply(sc, r);
        let au = self.a_apply(&u);
        let mut rhs = DVector::zeros(m + nf);
        for i in 0..m {
            rhs[i] = t[i] - au[i];
        }
        for (f, (v, _)) in self.layout.free.iter().enumerate() {
            rhs[m + f] = -r[*v];
        }
        let sol = fac.solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let q: Vec<f64> = sol.rows(0, m).iter().cloned().collect();
        let atq = self.at_apply(&q);
        let corr = self.ginv_apply(sc, &atq);
        let mut p: Vec<f64> = u.iter().zip(&corr).map(|(a, b)| a + b).collect();
        for (f, (v, _)) in self.layout.free.iter().enumerate() {
            p[*v] = sol[m + f];
        }
        Some((p, q))
    }

    /// Adds the cone part of `R⁻ᵀ U R⁻¹` to `r1`.
    fn add_complementarity_term(&self, sc: &Scaling, rhs: &ComplementarityRhs, r1: &mut [f64]) {
        for ((blk, ps), u) in self.layout.psd.iter().zip(&sc.psd).zip(&rhs.psd) {
            let len = svec_len(blk.dim);
            let t = svec(&ps.from_scaled_dual(u));
            for (a, b) in r1[blk.offset..blk.offset + len].iter_mut().zip(t) {
                *a += b;
            }
        }
        for (k, (v, _)) in self.layout.nonneg.iter().enumerate() {
            // orthant: R⁻¹ = 1/√(x/s)
            r1[*v] += rhs.nonneg[k] / sc.ratio[k].sqrt();
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        sc: &Scaling,
        fac: &KktFactor,
        base: &(Vec<f64>, Vec<f64>),
        res: &WorkResiduals,
        eta: f64,
        comp: &ComplementarityRhs,
        r_tau: f64,
        tau: f64,
        kappa: f64,
    ) -> Option<Direction> {
        let n = self.layout.n;
        let mut r1: Vec<f64> = res.rd.iter().map(|v| -eta * v).collect();
        self.add_complementarity_term(sc, comp, &mut r1);
        let r2: Vec<f64> = res.rp.iter().map(|v| -eta * v).collect();
        let r3 = -eta * res.rg - r_tau / tau;

        let (p1, q1) = self.kkt_solve(sc, fac, &r1, &r2)?;
        let (p2, q2) = base;
        let denom = dot(&self.c, p2) - dot(&self.b, q2) - kappa / tau;
        let dtau = (r3 - dot(&self.c, &p1) + dot(&self.b, &q1)) / denom;
        if !dtau.is_finite() {
            return None;
        }
        let dx: Vec<f64> = (0..n).map(|i| p1[i] + dtau * p2[i]).collect();
        let dy: Vec<f64> = q1.iter().zip(q2).map(|(a, b)| a + dtau * b).collect();
        let dkappa = (r_tau - kappa * dtau) / tau;

        // ds from the dual equation, so its residual contracts exactly even
        // when the complementarity row is solved only approximately
        let atdy = self.at_apply(&dy);
        let mut ds: Vec<f64> = (0..n)
            .map(|i| if self.layout.is_free[i] { 0.0 } else { self.c[i] * dtau - atdy[i] + eta * res.rd[i] })
            .collect();
        let mut scaled = ScaledDirection { psd: Vec::new(), nonneg: Vec::new() };
        for (blk, ps) in self.layout.psd.iter().zip(&sc.psd) {
            let len = svec_len(blk.dim);
            let dxs = ps.to_scaled(&smat(&dx[blk.offset..blk.offset + len], blk.dim));
            let dsm = crate::linalg::symmetrize(&smat(&ds[blk.offset..blk.offset + len], blk.dim));
            let dss = ps.to_scaled_dual(&dsm);
            svec_into(&dsm, &mut ds[blk.offset..blk.offset + len]);
            scaled.psd.push((dxs, dss));
        }
        for (k, (v, _)) in self.layout.nonneg.iter().enumerate() {
            let w = sc.ratio[k].sqrt();
            scaled.nonneg.push((dx[*v] / w, ds[*v] * w));
        }
        Some(Direction { dx, dy, ds, dtau, dkappa, scaled })
    }

    /// Largest step keeping the scaled point `Λ + α·d` in the cone.
    fn max_step(&self, sc: &Scaling, dir: &Direction, tau: f64, kappa: f64) -> f64 {
        let mut alpha = f64::INFINITY;
        for (ps, (dxs, dss)) in sc.psd.iter().zip(&dir.scaled.psd) {
            let inv_sqrt: Vec<f64> = ps.lam.iter().map(|l| 1.0 / l.sqrt()).collect();
            for d in [dxs, dss] {
                let mut t = d.clone();
                for i in 0..t.nrows() {
                    for j in 0..t.ncols() {
                        t[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
                    }
                }
                let t = crate::linalg::symmetrize(&t);
                let emin = SymmetricEigen::new(t).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                if emin < 0.0 {
                    alpha = alpha.min(-1.0 / emin);
                }
            }
        }
        for (k, (dxs, dss)) in dir.scaled.nonneg.iter().enumerate() {
            let l = sc.lam[k];
            for d in [dxs, dss] {
                if *d < 0.0 {
                    alpha = alpha.min(-l / d);
                }
            }
        }
        if dir.dtau < 0.0 {
            alpha = alpha.min(-tau / dir.dtau);
        }
        if dir.dkappa < 0.0 {
            alpha = alpha.min(-kappa / dir.dkappa);
        }
        alpha
    }

    fn residuals(&self, x: &[f64], y: &[f64], s: &[f64], tau: f64, kappa: f64) -> WorkResiduals {
        let ax = self.a_apply(x);
        let rp: Vec<f64> = ax.iter().zip(&self.b).map(|(a, b)| a - b * tau).collect();
        let aty = self.at_apply(y);
        let rd: Vec<f64> = (0..self.layout.n).map(|i| self.c[i] * tau - aty[i] - s[i]).collect();
        let rg = kappa + dot(&self.c, x) - dot(&self.b, y);
        WorkResiduals { rp, rd, rg }
    }

    fn run(&mut self) -> SolverResult {
        let (mut x, mut y, mut s) = self.initial_point();
        let (mut tau, mut kappa) = (1.0f64, 1.0f64);
        let nu = self.layout.degree as f64 + 1.0;
        let opts = self.options;
        let mut history = Vec::new();
        let mut step = 0.0;
        let mut stalls = 0;
        let status: Status;
        let mut iter = 0;

        loop {
            let mu = (self.cone_dot(&x, &s) + tau * kappa) / nu;
            let (xo, yo, so) = self.unscale(&x, &y, &s, tau);
            let res = compute_residuals(self.original, &xo, &yo, &so);
            let log = IterationLog {
                iter,
                mu,
                pres: res.primal,
                dres: res.dual,
                gap: res.gap,
                pobj: dot(&self.original.cost, &xo),
                dobj: dot(&self.original.rhs, &yo),
                tau,
                kappa,
                step,
            };
            debug!("{log}");
            if opts.verbose {
                eprintln!("{log}");
            }
            history.push(log);

            if res.max() <= opts.tol {
                status = Status::Optimal;
                break;
            }
            if let Some(st) = self.infeasibility(&x, &y, &s, tau, kappa) {
                status = st;
                break;
            }
            if iter >= opts.max_iter {
                status = Status::MaxIter;
                break;
            }
            iter += 1;

            let Some(sc) = self.scaling(&x, &s) else {
                warn!("iterate left the cone interior at iteration {iter}");
                status = Status::NumericalFailure;
                break;
            };
            let Some(fac) = self.factor(&sc) else {
                status = Status::NumericalFailure;
                break;
            };
            let neg_c: Vec<f64> = self.c.iter().map(|v| -v).collect();
            let Some(base) = self.kkt_solve(&sc, &fac, &neg_c, &self.b) else {
                status = Status::NumericalFailure;
                break;
            };
            let wres = self.residuals(&x, &y, &s, tau, kappa);

            // predictor
            let aff_rhs = ComplementarityRhs {
                psd: sc.psd.iter().map(|ps| DMatrix::from_diagonal(&DVector::from_iterator(ps.lam.len(), ps.lam.iter().map(|l| -l)))).collect(),
                nonneg: sc.lam.iter().map(|l| -l).collect(),
            };
            let Some(aff) = self.direction(&sc, &fac, &base, &wres, 1.0, &aff_rhs, -tau * kappa, tau, kappa) else {
                status = Status::NumericalFailure;
                break;
            };
            let alpha_aff = self.max_step(&sc, &aff, tau, kappa).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

            // corrector
            let target = sigma * mu;
            let comb_rhs = ComplementarityRhs {
                psd: sc
                    .psd
                    .iter()
                    .zip(&aff.scaled.psd)
                    .map(|(ps, (dxs, dss))| {
                        let prod = dxs * dss;
                        let corr = (&prod + prod.transpose()) * 0.5;
                        let d = ps.lam.len();
                        DMatrix::from_fn(d, d, |i, j| {
                            let mut v = -corr[(i, j)];
                            if i == j {
                                v += target - ps.lam[i] * ps.lam[i];
                            }
                            2.0 * v / (ps.lam[i] + ps.lam[j])
                        })
                    })
                    .collect(),
                nonneg: sc
                    .lam
                    .iter()
                    .zip(&aff.scaled.nonneg)
                    .map(|(l, (a, b))| (target - l * l - a * b) / l)
                    .collect(),
            };
            let r_tau = target - tau * kappa - aff.dtau * aff.dkappa;
            let Some(dir) = self.direction(&sc, &fac, &base, &wres, 1.0 - sigma, &comb_rhs, r_tau, tau, kappa) else {
                status = Status::NumericalFailure;
                break;
            };
            let alpha = (opts.step_fraction * self.max_step(&sc, &dir, tau, kappa)).min(1.0);
            if !(alpha.is_finite() && alpha > 0.0) {
                status = Status::NumericalFailure;
                break;
            }
            for i in 0..self.layout.n {
                x[i] += alpha * dir.dx[i];
                s[i] += alpha * dir.ds[i];
            }
            for i in 0..self.layout.m {
                y[i] += alpha * dir.dy[i];
            }
            tau += alpha * dir.dtau;
            kappa += alpha * dir.dkappa;
            step = alpha;
            debug_assert!(tau > 0.0 && kappa > 0.0);

            stalls = if alpha < 1e-8 { stalls + 1 } else { 0 };
            if stalls >= 5 {
                warn!("step length stalled at {alpha:.2e}");
                status = Status::NumericalFailure;
                break;
            }
        }

        self.finish(status, x, y, s, tau, iter, history)
    }

    /// Farkas-type certificates read off the current homogeneous iterate.
    fn infeasibility(&self, x: &[f64], y: &[f64], s: &[f64], tau: f64, kappa: f64) -> Option<Status> {
        if tau > kappa {
            return None;
        }
        let tol = self.options.tol;
        let by = dot(&self.b, y);
        if by > 0.0 {
            let aty = self.at_apply(y);
            let r: Vec<f64> = aty.iter().zip(s).map(|(a, b)| a + b).collect();
            if norm(&r) <= tol * by {
                return Some(Status::Infeasible);
            }
        }
        let cx = dot(&self.c, x);
        if cx < 0.0 {
            let ax = self.a_apply(x);
            if norm(&ax) <= tol * (-cx) {
                return Some(Status::Unbounded);
            }
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        status: Status,
        x: Vec<f64>,
        y: Vec<f64>,
        s: Vec<f64>,
        tau: f64,
        iterations: usize,
        history: Vec<IterationLog>,
    ) -> SolverResult {
        let (x, y, s) = match status {
            Status::Infeasible => {
                let (x, yo, so) = self.unscale(&x, &y, &s, 1.0);
                let by = dot(&self.original.rhs, &yo);
                (x, yo.iter().map(|v| v / by).collect(), so.iter().map(|v| v / by).collect())
            }
            Status::Unbounded => {
                let (xo, yo, so) = self.unscale(&x, &y, &s, 1.0);
                let cx = -dot(&self.original.cost, &xo);
                (xo.iter().map(|v| v / cx).collect(), yo, so)
            }
            _ => self.unscale(&x, &y, &s, tau),
        };
        let residuals = compute_residuals(self.original, &x, &y, &s);
        let status = if status == Status::NumericalFailure && residuals.max() <= self.options.reduced_tol {
            warn!("accepting stalled iterate with residuals {:.2e}/{:.2e}/{:.2e}", residuals.primal, residuals.dual, residuals.gap);
            Status::Inaccurate
        } else {
            status
        };
        SolverResult {
            status,
            primal_objective: dot(&self.original.cost, &x),
            dual_objective: dot(&self.original.rhs, &y),
            x,
            y,
            s,
            iterations,
            residuals,
            history,
            dropped_rows: Vec::new(),
        }
    }
}

struct WorkResiduals {
    rp: Vec<f64>,
    rd: Vec<f64>,
    rg: f64,
}

/// `svec(Rᵀ A_i R)` for every row `i` touching the block, one per column.
fn scaled_psd_rows(blk: &PsdData, r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = blk.dim;
    let rt = r.transpose();
    let cols: Vec<Vec<f64>> = blk
        .terms
        .par_iter()
        .map(|terms| {
            let mut pos = vec![usize::MAX; n];
            let mut plist = Vec::new();
            for &(p, q, _) in terms {
                for k in [p, q] {
                    if pos[k] == usize::MAX {
                        pos[k] = plist.len();
                        plist.push(k);
                    }
                }
            }
            // (A_i R)ᵀ restricted to the touched indices
            let mut art = DMatrix::zeros(n, plist.len());
            for &(p, q, coef) in terms {
                if p == q {
                    art.column_mut(pos[p]).axpy(coef, &rt.column(q), 1.0);
                } else {
                    let v = coef * FRAC_1_SQRT_2;
                    art.column_mut(pos[p]).axpy(v, &rt.column(q), 1.0);
                    art.column_mut(pos[q]).axpy(v, &rt.column(p), 1.0);
                }
            }
            svec(&(rt.select_columns(plist.iter()) * art.transpose()))
        })
        .collect();
    DMatrix::from_fn(svec_len(n), cols.len(), |i, j| cols[j][i])
}

/// Columns `⟨A_i, W A_j W⟩` of the Schur complement restricted to the rows
/// touching one PSD block, one column per touched row `j`.
fn schur_psd_columns(blk: &PsdData, w: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = blk.dim;
    blk.terms
        .par_iter()
        .map(|terms_j| {
            let mut pos = vec![usize::MAX; n];
            let mut plist = Vec::new();
            for &(p, q, _) in terms_j {
                for r in [p, q] {
                    if pos[r] == usize::MAX {
                        pos[r] = plist.len();
                        plist.push(r);
                    }
                }
            }
            // Eᵀ = (A_j W)ᵀ restricted to the touched matrix rows
            let mut et = DMatrix::zeros(n, plist.len());
            for &(p, q, coef) in terms_j {
                if p == q {
                    et.column_mut(pos[p]).axpy(coef, &w.column(q), 1.0);
                } else {
                    let v = coef * FRAC_1_SQRT_2;
                    et.column_mut(pos[p]).axpy(v, &w.column(q), 1.0);
                    et.column_mut(pos[q]).axpy(v, &w.column(p), 1.0);
                }
            }
            let wp = w.select_columns(plist.iter());
            let d = wp * et.transpose();
            blk.terms
                .iter()
                .map(|terms_i| {
                    terms_i
                        .iter()
                        .map(|&(p, q, coef)| {
                            if p == q {
                                coef * d[(p, p)]
                            } else {
                                coef * FRAC_1_SQRT_2 * (d[(p, q)] + d[(q, p)])
                            }
                        })
                        .sum()
                })
                .collect()
        })
        .collect()
}
