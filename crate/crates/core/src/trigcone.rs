//! Semidefinite description of nonnegative trigonometric polynomials.
//!
//! A series `Σ_{|k|<N} d_k e^{ikν}` with `d_{−k} = conj(d_k)` is nonnegative
//! iff some Hermitian `F ⪰ 0` of order `N` has diagonal sums
//!
//! ```txt
//!     Σ_{p=k}^{N−1} F[p, p−k] = d_k,     k = 0 … N−1   (0-based)
//! ```
//!
//! The real solver sees `F` through a symmetric `Z ⪰ 0` of order `2N` with
//! `F = ½((Z₁₁ + Z₂₂) + i(Z₂₁ − Z₁₂))`. Every `Z ⪰ 0` maps to some `F ⪰ 0`
//! and `hermitian_to_real(F)` maps back, so no structure constraints on `Z`
//! are needed.

use conic::{solve, PsdBlock, ProgramBuilder, RowBuilder, SolverOptions};
use log::debug;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anisotropy::AnisotropyFunction;
use crate::error::{Error, Result};

/// A complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HermitianJson", into = "HermitianJson")]
pub struct HermitianBlock {
    entries: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct HermitianJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<HermitianJson> for HermitianBlock {
    type Error = Error;
    fn try_from(j: HermitianJson) -> Result<Self> {
        let n = j.dim;
        if j.re.len() != n || j.im.len() != n || j.re.iter().chain(&j.im).any(|r| r.len() != n) {
            return Err(Error::Parse(format!("Hermitian block rows do not match dim {n}")));
        }
        HermitianBlock::new(DMatrix::from_fn(n, n, |a, b| Complex64::new(j.re[a][b], j.im[a][b])))
    }
}

impl From<HermitianBlock> for HermitianJson {
    fn from(h: HermitianBlock) -> Self {
        let n = h.dim();
        let rows = |f: fn(&Complex64) -> f64| (0..n).map(|a| (0..n).map(|b| f(&h.entries[(a, b)])).collect()).collect();
        HermitianJson { dim: n, re: rows(|c| c.re), im: rows(|c| c.im) }
    }
}

impl HermitianBlock {
    /// Checks `H = Hᴴ` to `1e−12` relative and symmetrizes.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotHermitian(f64::INFINITY));
        }
        let adj = entries.adjoint();
        let asym = (&entries - &adj).iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let scale = entries.iter().fold(1.0f64, |m, c| m.max(c.norm()));
        if asym > 1e-12 * scale {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self { entries: (&entries + adj) * Complex64::new(0.5, 0.0) })
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: DMatrix::identity(n, n) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { entries: DMatrix::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        // each eigenvalue appears twice in the embedding
        let ev = conic::linalg::sorted_eigenvalues(&hermitian_to_real(self));
        ev.into_iter().step_by(2).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `d_k = Σ_{p=k}^{N−1} F[p, p−k]` for `k = 0 … N−1`.
    pub fn diagonal_sums(&self) -> Vec<Complex64> {
        let n = self.dim();
        (0..n).map(|k| (k..n).map(|p| self.entries[(p, p - k)]).sum()).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).sum()
    }

    /// `H + t·I`.
    pub fn shifted(&self, t: f64) -> Self {
        let n = self.dim();
        Self { entries: &self.entries + DMatrix::<Complex64>::identity(n, n) * Complex64::new(t, 0.0) }
    }
}

/// `[[Re H, −Im H], [Im H, Re H]]`.
pub fn hermitian_to_real(h: &HermitianBlock) -> DMatrix<f64> {
    let n = h.dim();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let c = h.entries[(a, b)];
            m[(a, b)] = c.re;
            m[(n + a, n + b)] = c.re;
            m[(n + a, b)] = c.im;
            m[(a, n + b)] = -c.im;
        }
    }
    m
}

/// `½((Z₁₁ + Z₂₂) + i(Z₂₁ − Z₁₂))` for a symmetric `Z` of even order.
pub fn real_to_hermitian(z: &DMatrix<f64>) -> HermitianBlock {
    let n = z.nrows() / 2;
    let entries = DMatrix::from_fn(n, n, |a, b| {
        Complex64::new(0.5 * (z[(a, b)] + z[(n + a, n + b)]), 0.5 * (z[(n + a, b)] - z[(a, n + b)]))
    });
    HermitianBlock { entries: (&entries + entries.adjoint()) * Complex64::new(0.5, 0.0) }
}

/// Diagonal-sum equations `Σ_p F[p, p−k] = d_k` for one Hermitian variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzConstraintSet {
    pub order: usize,
    pub targets: Vec<Complex64>,
}

impl ToeplitzConstraintSet {
    pub fn new(targets: Vec<Complex64>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidProblem("empty target sequence".into()));
        }
        if targets[0].im.abs() > 1e-12 * (1.0 + targets[0].re.abs()) {
            return Err(Error::ComplexMean(targets[0].im));
        }
        Ok(Self { order: targets.len(), targets })
    }

    /// Targets `σ_k`: certifies `σ ≥ 0`.
    pub fn for_sigma(sigma: &AnisotropyFunction) -> Self {
        Self { order: sigma.modes(), targets: sigma.coefficients().to_vec() }
    }

    /// Targets `(1 − k²)σ_k`: certifies `σ + σ″ ≥ 0`.
    pub fn for_stiffness(sigma: &AnisotropyFunction) -> Self {
        let targets = sigma.coefficients().iter().enumerate().map(|(k, c)| c * (1.0 - (k * k) as f64)).collect();
        Self { order: sigma.modes(), targets }
    }

    /// Largest violation of the equations by `f`.
    pub fn residual(&self, f: &HermitianBlock) -> f64 {
        f.diagonal_sums().iter().zip(&self.targets).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

/// Rows expressing the diagonal sums of the Hermitian matrix encoded by the
/// `2N × 2N` block `z`: entry `k` holds the row for `Re d_k` and, for
/// `k ≥ 1`, the row for `Im d_k`. Callers add their own terms and
/// right-hand sides.
pub fn diagonal_sum_rows(z: PsdBlock, order: usize) -> Vec<(RowBuilder, Option<RowBuilder>)> {
    let n = order;
    (0..n)
        .map(|k| {
            let mut re = RowBuilder::new();
            for p in k..n {
                re.add_entry(z, p, p - k, 0.5).add_entry(z, n + p, n + p - k, 0.5);
            }
            let im = (k > 0).then(|| {
                let mut im = RowBuilder::new();
                for p in k..n {
                    im.add_entry(z, n + p, p - k, 0.5).add_entry(z, p, n + p - k, -0.5);
                }
                im
            });
            (re, im)
        })
        .collect()
}

/// Outcome of the certificate search for one target sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSearch {
    /// `max t` such that `d − t·δ₀` has a certificate; equals the minimum of
    /// the trigonometric polynomial.
    pub margin: f64,
    /// Certificate for `d` itself, shifted from the optimal one by
    /// `(margin/N)·I`. Positive semidefinite when `margin ≥ 0`.
    pub certificate: HermitianBlock,
}

/// Margin below which a sequence is reported as not nonnegative.
fn member_tolerance(targets: &[Complex64]) -> f64 {
    let scale: f64 = targets.iter().map(|c| c.norm()).sum::<f64>().max(1.0);
    1e-8 * scale
}

/// Solves `max t` subject to `F ⪰ 0` with diagonal sums `d − t·δ₀`.
pub fn certificate_search(set: &ToeplitzConstraintSet, options: &SolverOptions) -> Result<CertificateSearch> {
    let n = set.order;
    let mut b = ProgramBuilder::new();
    let z = b.add_psd(2 * n);
    let t = b.add_free(1);
    b.add_cost(t.index(0), -1.0);
    for (k, (mut re, im)) in diagonal_sum_rows(z, n).into_iter().enumerate() {
        if k == 0 {
            re.add(t.index(0), 1.0);
        }
        b.add_row(re, set.targets[k].re);
        if let Some(im) = im {
            b.add_row(im, set.targets[k].im);
        }
    }
    let program = b.build();
    let res = solve(&program, options)?.into_optimal()?;
    let margin = res.x[t.index(0)];
    let f = real_to_hermitian(&z.matrix(&res.x));
    debug!("certificate search: order {n}, margin {margin:.3e}, {} iterations", res.iterations);
    Ok(CertificateSearch { margin, certificate: f.shifted(margin / n as f64) })
}

/// A positive semidefinite `F` certifying `σ ≥ 0`.
pub fn nonneg_certificate(sigma: &AnisotropyFunction, options: &SolverOptions) -> Result<HermitianBlock> {
    let set = ToeplitzConstraintSet::for_sigma(sigma);
    let s = certificate_search(&set, options)?;
    if s.margin < -member_tolerance(&set.targets) {
        return Err(Error::Infeasible(s.margin));
    }
    Ok(s.certificate)
}

/// Membership of `σ` in the cone `{σ ≥ 0, σ + σ″ ≥ 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeMembership {
    pub member: bool,
    /// Certified minimum of `σ`.
    pub sigma_min: f64,
    /// Certified minimum of `σ + σ″`.
    pub stiffness_min: f64,
    pub f: Option<HermitianBlock>,
    pub g: Option<HermitianBlock>,
}

pub fn cone_membership(sigma: &AnisotropyFunction, options: &SolverOptions) -> Result<ConeMembership> {
    let fs = ToeplitzConstraintSet::for_sigma(sigma);
    let gs = ToeplitzConstraintSet::for_stiffness(sigma);
    let f = certificate_search(&fs, options)?;
    let g = certificate_search(&gs, options)?;
    let f_ok = f.margin >= -member_tolerance(&fs.targets);
    let g_ok = g.margin >= -member_tolerance(&gs.targets);
    Ok(ConeMembership {
        member: f_ok && g_ok,
        sigma_min: f.margin,
        stiffness_min: g.margin,
        f: f_ok.then_some(f.certificate),
        g: g_ok.then_some(g.certificate),
    })
}
