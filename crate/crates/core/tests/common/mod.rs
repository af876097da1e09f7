#![allow(dead_code)]

use std::f64::consts::PI;

use anisofit::anisotropy::AnisotropyFunction;
use anisofit::curve::PolygonalCurve;
use anisofit::pipeline::polar_curve;
use anisofit::qcqp::{QcqpProblem, QuadraticForm};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

/// Star-shaped curve `r(u) = 1 + Σ a_j cos(2πju + φ_j)` with `Σ|a_j| ≤ 0.45`.
pub fn random_curve<R: Rng>(rng: &mut R, k: usize) -> PolygonalCurve {
    let harmonics = rng.gen_range(1..=5);
    let mut terms = Vec::new();
    let mut budget = 0.45;
    for _ in 0..harmonics {
        let a = rng.gen_range(0.0..budget);
        budget -= a;
        terms.push((rng.gen_range(1..=6) as f64, a, rng.gen_range(0.0..2.0 * PI)));
    }
    let scale = rng.gen_range(0.5..3.0);
    polar_curve(k, move |u| scale * (1.0 + terms.iter().map(|(j, a, p)| a * (2.0 * PI * j * u + p).cos()).sum::<f64>()))
        .expect("random curve is valid")
}

/// `σ₀ = 1` plus random harmonics of size up to `amp / k`.
pub fn random_sigma<R: Rng>(rng: &mut R, modes: usize, amp: f64) -> AnisotropyFunction {
    let c = (0..modes)
        .map(|k| {
            if k == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                let r = rng.gen_range(0.0..amp) / k as f64;
                Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI))
            }
        })
        .collect();
    AnisotropyFunction::new(c).unwrap()
}

/// Minimum of `f` over `samples` uniform angles in `[0, 2π)`.
pub fn grid_min(f: impl Fn(f64) -> f64, samples: usize) -> f64 {
    (0..samples).map(|i| f(2.0 * PI * i as f64 / samples as f64)).fold(f64::INFINITY, f64::min)
}

/// Trapezoid rule for `½∫(σ² − σ′²) dν`.
pub fn wulff_area_quadrature(sigma: &AnisotropyFunction, samples: usize) -> f64 {
    let h = 2.0 * PI / samples as f64;
    (0..samples)
        .map(|i| {
            let nu = i as f64 * h;
            0.5 * (sigma.evaluate(nu).powi(2) - sigma.derivative(nu).powi(2)) * h
        })
        .sum()
}

/// Random QCQP in `n` variables: objective `xᵀP₀x + 2q₀ᵀx`, box constraints
/// `(x_i − l_i)(x_i − u_i) ≤ 0` and `m` random equalities through an interior
/// point. `convex` makes `P₀` positive semidefinite.
pub fn random_box_qcqp<R: Rng>(rng: &mut R, n: usize, m: usize, convex: bool) -> BoxQcqp {
    let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..-0.2)).collect();
    let upper: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let p0 = if convex { &g * g.transpose() } else { (&g + g.transpose()) * 0.5 };
    let q0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let constraints = (0..n)
        .map(|i| {
            let mut p = DMatrix::zeros(n, n);
            p[(i, i)] = 1.0;
            let mut q = DVector::zeros(n);
            q[i] = -0.5 * (lower[i] + upper[i]);
            QuadraticForm::new(p, q, lower[i] * upper[i])
        })
        .collect();
    let inner: Vec<f64> = (0..n).map(|i| 0.5 * (lower[i] + upper[i]) + 0.25 * rng.gen_range(-1.0..1.0) * (upper[i] - lower[i])).collect();
    let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let b = &a * DVector::from_column_slice(&inner);
    let problem = QcqpProblem { objective: QuadraticForm::new(p0, q0, 0.0), constraints, a, b, lmi: None, trig: vec![] };
    BoxQcqp { problem, lower, upper, inner }
}

pub struct BoxQcqp {
    pub problem: QcqpProblem,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// A strictly feasible point.
    pub inner: Vec<f64>,
}

impl BoxQcqp {
    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }

    /// Orthonormal basis of `ker A`, one column per free direction.
    pub fn null_basis(&self) -> DMatrix<f64> {
        let a = &self.problem.a;
        let n = a.ncols();
        if a.nrows() == 0 {
            return DMatrix::identity(n, n);
        }
        let eig = nalgebra::SymmetricEigen::new(a.transpose() * a);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let k = n - a.nrows();
        DMatrix::from_fn(n, k, |r, c| eig.eigenvectors[(r, order[c])])
    }

    /// Smallest objective over feasible points of a grid on `inner + N t`.
    pub fn grid_optimum(&self, per_dim: usize) -> f64 {
        let nb = self.null_basis();
        let k = nb.ncols();
        let reach: f64 = self.lower.iter().zip(&self.upper).map(|(l, u)| (u - l).powi(2)).sum::<f64>().sqrt();
        let x0 = DVector::from_column_slice(&self.inner);
        let mut best = self.problem.objective_value(&self.inner);
        let total = per_dim.pow(k as u32);
        for idx in 0..total {
            let mut t = DVector::zeros(k);
            let mut rest = idx;
            for c in 0..k {
                t[c] = -reach + 2.0 * reach * (rest % per_dim) as f64 / (per_dim - 1) as f64;
                rest /= per_dim;
            }
            let x = &x0 + &nb * t;
            if self.in_box(x.as_slice()) {
                best = best.min(self.problem.objective_value(x.as_slice()));
            }
        }
        best
    }
}
