//! Quadratically constrained quadratic programs with linear equalities and a
//! linear matrix inequality,
//!
//! ```txt
//!     min  xᵀP₀x + 2q₀ᵀx + r₀
//!     s.t. xᵀP_l x + 2q_lᵀx + r_l ≤ 0,   l = 1 … d
//!          A x = b
//!          H₀ + Σ_j x_j H_j ⪰ 0
//! ```
//!
//! and their enhanced semidefinite relaxation, in which `xxᵀ` is replaced by
//! a matrix `X` subject to `AX = bxᵀ` and
//!
//! ```txt
//!     M = [[X, x], [xᵀ, 1]] ⪰ 0.
//! ```
//!
//! Constraints "the trigonometric series with coefficients `w_k x_k` is
//! nonnegative" can be attached as well; they are lowered through
//! [`crate::trigcone`].

use conic::{solve, Cone, ConicProgram, ProgramBuilder, PsdBlock, RowBuilder, SolverOptions, SolverResult, Status, VectorBlock};
use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trigcone::{certificate_search, diagonal_sum_rows, hermitian_to_real, HermitianBlock, ToeplitzConstraintSet};

mod dense {
    //! Row-major nested arrays for nalgebra matrices and vectors.
    use nalgebra::{DMatrix, DVector};
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        if rows.iter().any(|v| v.len() != c) {
            return None;
        }
        Some(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub mod matrix {
        use super::*;
        pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
            rows(m).serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
            let v = Vec::<Vec<f64>>::deserialize(d)?;
            from_rows(&v).ok_or_else(|| D::Error::custom("ragged matrix rows"))
        }
    }

    pub mod vector {
        use super::*;
        pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.as_slice().serialize(s)
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
            Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
        }
    }
}

/// `xᵀPx + 2qᵀx + r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    #[serde(with = "dense::matrix")]
    pub p: DMatrix<f64>,
    #[serde(with = "dense::vector")]
    pub q: DVector<f64>,
    pub r: f64,
}

impl QuadraticForm {
    pub fn new(p: DMatrix<f64>, q: DVector<f64>, r: f64) -> Self {
        Self { p, q, r }
    }

    /// Pure quadratic `xᵀPx`.
    pub fn quadratic(p: DMatrix<f64>) -> Self {
        let n = p.nrows();
        Self { p, q: DVector::zeros(n), r: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        (x.transpose() * &self.p * &x)[(0, 0)] + 2.0 * self.q.dot(&x) + self.r
    }

    /// Value at a lifted point: `tr(PX) + 2qᵀx + r`.
    pub fn lifted_value(&self, x: &[f64], big_x: &DMatrix<f64>) -> f64 {
        self.p.component_mul(big_x).sum() + 2.0 * self.q.dot(&DVector::from_column_slice(x)) + self.r
    }

    /// `[[P, q], [qᵀ, r]]`.
    pub fn homogenized(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut c = DMatrix::zeros(n + 1, n + 1);
        c.view_mut((0, 0), (n, n)).copy_from(&self.p);
        for i in 0..n {
            c[(i, n)] = self.q[i];
            c[(n, i)] = self.q[i];
        }
        c[(n, n)] = self.r;
        c
    }
}

/// The series `Σ_{|k|<N} d_k e^{ikν}` with
/// `d_k = w_k (x[re_k] + i·x[im_k])` must be nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigConstraint {
    pub weights: Vec<f64>,
    pub re_index: Vec<usize>,
    /// `None` for a zero imaginary part (always the case for `k = 0`).
    pub im_index: Vec<Option<usize>>,
}

impl TrigConstraint {
    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn targets(&self, x: &[f64]) -> Vec<Complex64> {
        (0..self.order())
            .map(|k| {
                let im = self.im_index[k].map_or(0.0, |i| x[i]);
                Complex64::new(x[self.re_index[k]], im) * self.weights[k]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcqpProblem {
    pub objective: QuadraticForm,
    /// Constraints `value ≤ 0`.
    #[serde(default)]
    pub constraints: Vec<QuadraticForm>,
    #[serde(with = "dense::matrix")]
    pub a: DMatrix<f64>,
    #[serde(with = "dense::vector")]
    pub b: DVector<f64>,
    /// `H₀ … H_n`, or `None` without a matrix inequality.
    #[serde(default)]
    pub lmi: Option<Vec<HermitianBlock>>,
    #[serde(default)]
    pub trig: Vec<TrigConstraint>,
}

impl QcqpProblem {
    pub fn n(&self) -> usize {
        self.objective.dim()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Checks dimensions and symmetry. Rank deficiency of `A` and
    /// indefinite constraint matrices are only logged.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let bad = |s: String| Err(Error::InvalidProblem(s));
        for (l, f) in std::iter::once(&self.objective).chain(&self.constraints).enumerate() {
            if f.p.nrows() != n || f.p.ncols() != n || f.q.len() != n {
                return bad(format!("quadratic form {l} has the wrong size"));
            }
            let asym = (&f.p - f.p.transpose()).amax();
            if asym > 1e-12 * f.p.amax().max(1.0) {
                return bad(format!("P_{l} is not symmetric ({asym:e})"));
            }
        }
        if self.a.ncols() != n || self.a.nrows() != self.b.len() {
            return bad(format!("A is {}x{}, expected {}x{n}", self.a.nrows(), self.a.ncols(), self.b.len()));
        }
        if let Some(h) = &self.lmi {
            if h.len() != n + 1 {
                return bad(format!("LMI needs {} matrices, got {}", n + 1, h.len()));
            }
            if h.iter().any(|m| m.dim() != h[0].dim()) {
                return bad("LMI matrices differ in size".into());
            }
        }
        for (t, c) in self.trig.iter().enumerate() {
            let k = c.order();
            if k == 0 || c.re_index.len() != k || c.im_index.len() != k {
                return bad(format!("trigonometric constraint {t} is malformed"));
            }
            if c.re_index.iter().chain(c.im_index.iter().flatten()).any(|&i| i >= n) || c.im_index[0].is_some() {
                return bad(format!("trigonometric constraint {t} has bad indices"));
            }
        }
        if self.m() > 0 {
            let sv = self.a.clone().singular_values();
            let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(l, h), s| (l.min(*s), h.max(*s)));
            if self.m() > n || lo <= 1e-10 * hi {
                warn!("A is rank deficient (singular values in [{lo:e}, {hi:e}])");
            }
        }
        for (l, f) in self.constraints.iter().enumerate() {
            if conic::linalg::min_eigenvalue(&f.p) < -1e-12 {
                warn!("P_{} is indefinite; a zero gap does not certify feasibility", l + 1);
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    /// Checks every constraint of the original problem at `x` to `tol`.
    /// Trigonometric constraints are checked on a grid of 4096 angles.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        let xv = DVector::from_column_slice(x);
        if (&self.a * &xv - &self.b).amax() > tol {
            return false;
        }
        if self.constraints.iter().any(|c| c.value(x) > tol) {
            return false;
        }
        if let Some(h) = &self.lmi {
            let s = lmi_value(h, x);
            if conic::linalg::min_eigenvalue(&s) < -tol {
                return false;
            }
        }
        self.trig.iter().all(|c| trig_grid_min(&c.targets(x), 4096) >= -tol)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

/// Real embedding of `H₀ + Σ x_j H_j`.
fn lmi_value(h: &[HermitianBlock], x: &[f64]) -> DMatrix<f64> {
    let mut s = hermitian_to_real(&h[0]);
    for (j, hj) in h[1..].iter().enumerate() {
        s += hermitian_to_real(hj) * x[j];
    }
    s
}

/// Minimum of `Σ_{|k|<N} d_k e^{ikν}` over `samples` uniform angles.
pub fn trig_grid_min(d: &[Complex64], samples: usize) -> f64 {
    (0..samples)
        .map(|i| {
            let nu = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
            d[0].re + d.iter().enumerate().skip(1).map(|(k, c)| 2.0 * (c * Complex64::from_polar(1.0, k as f64 * nu)).re).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// The conic program of the relaxation and where its pieces live.
///
/// Every feasible `M` satisfies `M·[a_i; −b_i] = 0`, so `M` never has full
/// rank and the program has no strictly feasible point. The moment matrix is
/// therefore written `M = V W Vᵀ` with `V = [[N, x₀], [0, 1]]`, where the
/// columns of `N` are an orthonormal basis of `ker A` and `x₀` is the
/// least-norm solution of `Ax = b`. The coupling `AX = bxᵀ` and `Ax = b`
/// then hold identically and `W` can be positive definite.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub program: ConicProgram,
    pub n: usize,
    /// `V`, of size `(n + 1) × r`.
    pub basis: DMatrix<f64>,
    /// `W`, of size `r`.
    pub moment: PsdBlock,
    /// Slacks of the quadratic inequalities.
    pub slacks: Option<VectorBlock>,
    /// Real embedding of the matrix inequality.
    pub lmi: Option<PsdBlock>,
    /// One `2N × 2N` block per trigonometric constraint.
    pub trig: Vec<PsdBlock>,
}

impl Relaxation {
    /// `M = [[X, x], [xᵀ, 1]]`.
    pub fn moment_matrix(&self, z: &[f64]) -> DMatrix<f64> {
        &self.basis * self.moment.matrix(z) * self.basis.transpose()
    }

    pub fn x_hat(&self, z: &[f64]) -> Vec<f64> {
        let m = self.moment_matrix(z);
        (0..self.n).map(|i| m[(i, self.n)]).collect()
    }

    pub fn big_x(&self, z: &[f64]) -> DMatrix<f64> {
        self.moment_matrix(z).view((0, 0), (self.n, self.n)).into_owned()
    }

    /// Program point representing `(x, xxᵀ)` for a feasible `x`.
    /// Trigonometric blocks are filled by a certificate search.
    pub fn lift(&self, problem: &QcqpProblem, x: &[f64], options: &SolverOptions) -> Result<Vec<f64>> {
        let n = self.n;
        let r = self.basis.ncols();
        let mut z = vec![0.0; self.program.num_vars()];
        let x0 = self.basis.view((0, r - 1), (n, 1));
        let d = DVector::from_column_slice(x) - x0;
        let mut w = self.basis.view((0, 0), (n, r - 1)).transpose() * d;
        w = w.push(1.0);
        write_block(&mut z, self.moment, &(&w * w.transpose()));
        if let Some(s) = self.slacks {
            for (l, c) in problem.constraints.iter().enumerate() {
                z[s.index(l)] = -c.value(x);
            }
        }
        if let (Some(blk), Some(h)) = (self.lmi, &problem.lmi) {
            write_block(&mut z, blk, &lmi_value(h, x));
        }
        for (blk, c) in self.trig.iter().zip(&problem.trig) {
            let set = ToeplitzConstraintSet::new(c.targets(x))?;
            let f = certificate_search(&set, options)?.certificate;
            write_block(&mut z, *blk, &hermitian_to_real(&f));
        }
        Ok(z)
    }

    /// Adds `x_j` to `row`, scaled by `coef`.
    fn add_x(&self, row: &mut RowBuilder, j: usize, coef: f64) {
        let last = self.basis.ncols() - 1;
        for a in 0..=last {
            let v = self.basis[(j, a)];
            if v != 0.0 {
                row.add_entry(self.moment, a, last, coef * v);
            }
        }
    }

    /// Adds `⟨H, M⟩` to `row`.
    fn add_lifted(&self, row: &mut RowBuilder, h: &DMatrix<f64>) {
        let c = self.basis.transpose() * h * &self.basis;
        for j in 0..c.ncols() {
            for i in j..c.nrows() {
                let v = if i == j { c[(i, i)] } else { c[(i, j)] + c[(j, i)] };
                if v != 0.0 {
                    row.add_entry(self.moment, i, j, v);
                }
            }
        }
    }
}

fn write_block(z: &mut [f64], blk: PsdBlock, m: &DMatrix<f64>) {
    let len = conic::svec_len(blk.dim);
    conic::linalg::svec_into(m, &mut z[blk.offset..blk.offset + len]);
}

/// `V = [[N, x₀], [0, 1]]` for the face `{M : M·[a_i; −b_i] = 0}`.
fn face_basis(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = a.ncols();
    let (x0, rank) = if a.nrows() == 0 {
        (DVector::zeros(n), 0)
    } else {
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.amax();
        let eps = 1e-10 * smax;
        let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
        let x0 = svd.solve(b, eps).map_err(|e| Error::InvalidProblem(e.to_string()))?;
        (x0, rank)
    };
    let res = (a * &x0 - b).amax();
    if res > 1e-9 * (1.0 + b.amax()) {
        return Err(Error::Infeasible(res));
    }
    // the n − rank eigenvectors of AᵀA with the smallest eigenvalues span ker A
    let eig = nalgebra::SymmetricEigen::new(a.transpose() * a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let k = n - rank;
    let mut v = DMatrix::zeros(n + 1, k + 1);
    for (c, &i) in order[..k].iter().enumerate() {
        v.view_mut((0, c), (n, 1)).copy_from(&eig.eigenvectors.column(i));
    }
    v.view_mut((0, k), (n, 1)).copy_from(&x0);
    v[(n, k)] = 1.0;
    Ok(v)
}

/// Enhanced semidefinite relaxation of `problem`.
pub fn relax(problem: &QcqpProblem) -> Result<Relaxation> {
    problem.validate()?;
    let n = problem.n();
    let basis = face_basis(&problem.a, &problem.b)?;
    let r = basis.ncols();
    let mut b = ProgramBuilder::new();
    let moment = b.add_psd(r);
    let mut rel = Relaxation { program: ProgramBuilder::new().build(), n, basis, moment, slacks: None, lmi: None, trig: vec![] };

    let mut cost = RowBuilder::new();
    rel.add_lifted(&mut cost, &problem.objective.homogenized());
    let cost = cost.build();
    for (&i, &v) in cost.idx.iter().zip(&cost.val) {
        b.add_cost(i, v);
    }

    let mut row = RowBuilder::new();
    row.add_entry(rel.moment, r - 1, r - 1, 1.0);
    b.add_row(row, 1.0);

    rel.slacks = (!problem.constraints.is_empty()).then(|| b.add_nonneg(problem.constraints.len()));
    if let Some(s) = rel.slacks {
        for (l, c) in problem.constraints.iter().enumerate() {
            let mut row = RowBuilder::new();
            rel.add_lifted(&mut row, &c.homogenized());
            row.add(s.index(l), 1.0);
            b.add_row(row, 0.0);
        }
    }

    if let Some(h) = &problem.lmi {
        let reals: Vec<DMatrix<f64>> = h.iter().map(hermitian_to_real).collect();
        let d = reals[0].nrows();
        let blk = b.add_psd(d);
        for c in 0..d {
            for rr in c..d {
                let mut row = RowBuilder::new();
                row.add_entry(blk, rr, c, 1.0);
                for j in 0..n {
                    let v = reals[j + 1][(rr, c)];
                    if v != 0.0 {
                        rel.add_x(&mut row, j, -v);
                    }
                }
                b.add_row(row, reals[0][(rr, c)]);
            }
        }
        rel.lmi = Some(blk);
    }

    for c in &problem.trig {
        let blk = b.add_psd(2 * c.order());
        for (k, (mut re, im)) in diagonal_sum_rows(blk, c.order()).into_iter().enumerate() {
            rel.add_x(&mut re, c.re_index[k], -c.weights[k]);
            b.add_row(re, 0.0);
            if let Some(mut im) = im {
                if let Some(i) = c.im_index[k] {
                    rel.add_x(&mut im, i, -c.weights[k]);
                }
                b.add_row(im, 0.0);
            }
        }
        rel.trig.push(blk);
    }

    rel.program = b.build();
    Ok(rel)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    /// `|tr(P₀X̂) − x̂ᵀP₀x̂| / |x̂ᵀP₀x̂|`, absent when the denominator vanishes.
    pub gap: Option<f64>,
    /// Numerical rank of `X̂ − x̂x̂ᵀ`.
    pub rank_defect: usize,
    pub finsler_rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: Status,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
}

impl From<&SolverResult> for SolveSummary {
    fn from(r: &SolverResult) -> Self {
        Self {
            status: r.status,
            iterations: r.iterations,
            primal_residual: r.residuals.primal,
            dual_residual: r.residuals.dual,
            duality_gap: r.residuals.gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdrSolution {
    pub x_hat: Vec<f64>,
    #[serde(with = "dense::matrix")]
    pub x_mat: DMatrix<f64>,
    /// Optimal value of the relaxation.
    pub objective_value: f64,
    pub certificates: Certificates,
    pub solver: SolveSummary,
}

impl SdrSolution {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Default relative threshold of [`rank_defect`].
pub const RANK_TOL: f64 = 1e-7;

/// Builds and solves the relaxation, then attaches the certificates.
pub fn solve_relaxation(problem: &QcqpProblem, options: &SolverOptions) -> Result<SdrSolution> {
    let relaxation = relax(problem)?;
    let res = solve(&relaxation.program, options)?;
    let summary = SolveSummary::from(&res);
    let res = res.into_optimal()?;
    Ok(extract_solution(problem, &relaxation, &res, summary))
}

pub(crate) fn extract_solution(
    problem: &QcqpProblem,
    relaxation: &Relaxation,
    res: &SolverResult,
    solver: SolveSummary,
) -> SdrSolution {
    let x_hat = relaxation.x_hat(&res.x);
    let x_mat = relaxation.big_x(&res.x);
    let mut sol = SdrSolution {
        x_hat,
        x_mat,
        objective_value: res.primal_objective,
        certificates: Certificates { gap: None, rank_defect: 0, finsler_rho: None },
        solver,
    };
    sol.certificates = Certificates {
        gap: gap(problem, &sol).ok(),
        rank_defect: rank_defect(&sol, RANK_TOL),
        finsler_rho: finsler_rho(problem),
    };
    sol
}

/// `|tr(P₀X̂) − x̂ᵀP₀x̂| / |x̂ᵀP₀x̂|`.
pub fn gap(problem: &QcqpProblem, sol: &SdrSolution) -> Result<f64> {
    let p = &problem.objective.p;
    let x = DVector::from_column_slice(&sol.x_hat);
    let quad = (x.transpose() * p * &x)[(0, 0)];
    let lifted = p.component_mul(&sol.x_mat).sum();
    let scale = p.amax() * x.norm_squared();
    if quad.abs() <= f64::EPSILON * scale || quad == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((lifted - quad).abs() / quad.abs())
}

/// Number of eigenvalues of `X̂ − x̂x̂ᵀ` above `max(tol·λ_max(X̂), 1e−9)`.
pub fn rank_defect(sol: &SdrSolution, tol: f64) -> usize {
    let x = DVector::from_column_slice(&sol.x_hat);
    let y = &sol.x_mat - &x * x.transpose();
    let lmax = conic::linalg::sorted_eigenvalues(&sol.x_mat).last().copied().unwrap_or(0.0);
    let thr = (tol * lmax).max(1e-9);
    conic::linalg::sorted_eigenvalues(&y).iter().filter(|&&e| e > thr).count()
}

/// Upper end of the search interval of [`finsler_rho`].
pub const RHO_MAX: f64 = 1e8;

/// Some `ϱ ∈ [0, RHO_MAX]` with `λ_min(P₀ + ϱAᵀA) ≥ −1e−9`, or `None`.
///
/// `λ_min` is concave in `ϱ`; a golden-section search finds its maximum and
/// a bisection then returns the smallest admissible `ϱ`.
pub fn finsler_rho(problem: &QcqpProblem) -> Option<f64> {
    const FLOOR: f64 = -1e-9;
    let p = &problem.objective.p;
    let ata = problem.a.transpose() * &problem.a;
    let f = |rho: f64| conic::linalg::min_eigenvalue(&(p + &ata * rho));
    if p.nrows() == 0 || f(0.0) >= FLOOR {
        return Some(0.0);
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, RHO_MAX);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1.max(f2) >= FLOOR || hi - lo <= 1e-12 * (1.0 + hi) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let best = if f1 >= f2 { x1 } else { x2 };
    if f(best) < FLOOR {
        return None;
    }
    // λ_min(0) < FLOOR ≤ λ_min(best) and concavity make the set an interval
    let (mut a, mut b) = (0.0, best);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid) >= FLOOR {
            b = mid;
        } else {
            a = mid;
        }
        if b - a <= 1e-12 * (1.0 + b) {
            break;
        }
    }
    Some(b)
}

/// `primal_oracle_value ≥ p̂₂ − 1e−6`.
pub fn verify_ordering(sol: &SdrSolution, primal_oracle_value: f64) -> bool {
    primal_oracle_value >= sol.objective_value - 1e-6
}

/// Cone layout of a relaxation, for diagnostics.
pub fn describe(relaxation: &Relaxation) -> String {
    let cones: Vec<String> = relaxation
        .program
        .cones
        .iter()
        .map(|c| match c {
            Cone::Free(d) => format!("free({d})"),
            Cone::Nonneg(d) => format!("nonneg({d})"),
            Cone::Psd(d) => format!("psd({d})"),
        })
        .collect();
    format!("{} rows, cones {}", relaxation.program.num_rows(), cones.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pin_problem() -> QcqpProblem {
        QcqpProblem {
            objective: QuadraticForm::quadratic(DMatrix::identity(1, 1)),
            constraints: vec![],
            a: DMatrix::from_element(1, 1, 1.0),
            b: DVector::from_element(1, 1.0),
            lmi: None,
            trig: vec![],
        }
    }

    fn sol(x: Vec<f64>, big: DMatrix<f64>) -> SdrSolution {
        SdrSolution {
            x_hat: x,
            x_mat: big,
            objective_value: 0.0,
            certificates: Certificates { gap: None, rank_defect: 0, finsler_rho: None },
            solver: SolveSummary { status: Status::Optimal, iterations: 0, primal_residual: 0.0, dual_residual: 0.0, duality_gap: 0.0 },
        }
    }

    #[test]
    fn equality_pins_the_lift() {
        let s = solve_relaxation(&pin_problem(), &SolverOptions::default()).unwrap();
        assert!((s.x_hat[0] - 1.0).abs() < 1e-7);
        assert!((s.x_mat[(0, 0)] - 1.0).abs() < 1e-7);
        assert!((s.objective_value - 1.0).abs() < 1e-7);
        assert_eq!(s.certificates.rank_defect, 0);
    }

    #[test]
    fn gap_and_rank_examples() {
        let mut p = pin_problem();
        p.objective = QuadraticForm::quadratic(DMatrix::identity(2, 2));
        p.a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let x = vec![1.0, 0.0];
        let tight = sol(x.clone(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(gap(&p, &tight).unwrap(), 0.0);
        assert_eq!(rank_defect(&tight, RANK_TOL), 0);
        let loose = sol(x, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        assert!((gap(&p, &loose).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rank_defect(&loose, RANK_TOL), 1);
        let zero = sol(vec![0.0, 0.0], DMatrix::identity(2, 2));
        assert!(matches!(gap(&p, &zero), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn finsler_examples() {
        let mut p = pin_problem();
        p.objective = QuadraticForm::quadratic(DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0])));
        p.a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let rho = finsler_rho(&p).unwrap();
        assert!(rho <= 1.0 + 1e-6);
        let m = &p.objective.p + p.a.transpose() * &p.a * rho;
        assert!(conic::linalg::min_eigenvalue(&m) >= -1e-9);
        // ϱ = 1 itself is admissible
        let m1 = &p.objective.p + p.a.transpose() * &p.a;
        assert!(conic::linalg::min_eigenvalue(&m1) >= -1e-9);

        p.a = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        assert_eq!(finsler_rho(&p), None);

        p.objective = QuadraticForm::quadratic(DMatrix::zeros(2, 2));
        assert_eq!(finsler_rho(&p), Some(0.0));
    }

    #[test]
    fn json_round_trip() {
        let mut p = pin_problem();
        p.constraints.push(QuadraticForm::new(DMatrix::identity(1, 1), DVector::zeros(1), -4.0));
        p.lmi = Some(vec![HermitianBlock::identity(1), HermitianBlock::zeros(1)]);
        let back = QcqpProblem::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
        let v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        assert!(v["a"][0].is_array());
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut p = pin_problem();
        p.b = DVector::zeros(2);
        assert!(p.validate().is_err());
        let mut p = pin_problem();
        p.objective.p = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(p.validate().is_err());
    }
}
