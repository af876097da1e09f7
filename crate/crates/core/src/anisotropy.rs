//! Anisotropy functions as truncated Fourier series
//!
//! ```txt
//!     σ(ν) = σ₀ + 2 Re Σ_{k=1}^{N−1} σ_k e^{ikν}
//! ```
//!
//! with real `σ₀`. The Wulff shape `W_σ` has boundary
//! `x(ν) = −σ(ν) n(ν) + σ′(ν) t(ν)` and area `½∫(σ² − σ′²) dν`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveSpectrum, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AnisotropyJson", into = "AnisotropyJson")]
pub struct AnisotropyFunction {
    coefficients: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct AnisotropyJson {
    modes: usize,
    coefficients: Vec<Complex64>,
}

impl TryFrom<AnisotropyJson> for AnisotropyFunction {
    type Error = Error;
    fn try_from(j: AnisotropyJson) -> Result<Self> {
        if j.modes != j.coefficients.len() {
            return Err(Error::Parse(format!("{} coefficients for {} modes", j.coefficients.len(), j.modes)));
        }
        AnisotropyFunction::new(j.coefficients)
    }
}

impl From<AnisotropyFunction> for AnisotropyJson {
    fn from(a: AnisotropyFunction) -> Self {
        AnisotropyJson { modes: a.coefficients.len(), coefficients: a.coefficients }
    }
}

impl AnisotropyFunction {
    /// Takes `σ₀ … σ_{N−1}`; `σ₀` must be real up to rounding.
    pub fn new(mut coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidProblem("anisotropy needs at least one coefficient".into()));
        }
        let c0 = coefficients[0];
        if c0.im.abs() > 1e-12 * (1.0 + c0.re.abs()) {
            return Err(Error::ComplexMean(c0.im));
        }
        coefficients[0].im = 0.0;
        Ok(Self { coefficients })
    }

    /// `σ ≡ value` with `modes` coefficients.
    pub fn constant(value: f64, modes: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); modes.max(1)];
        c[0].re = value;
        Self { coefficients: c }
    }

    /// `1 + ε cos(mν)` truncated to `modes ≥ m + 1` coefficients.
    pub fn kobayashi(eps: f64, m: usize, modes: usize) -> Self {
        let mut s = Self::constant(1.0, modes.max(m + 1));
        s.coefficients[m] = Complex64::new(eps / 2.0, 0.0);
        s
    }

    /// From `[Re σ; Im σ]` of length `2N`.
    pub fn from_real_split(x: &[f64]) -> Result<Self> {
        let n = x.len() / 2;
        if n == 0 || x.len() != 2 * n {
            return Err(Error::InvalidProblem(format!("split vector of odd length {}", x.len())));
        }
        Self::new((0..n).map(|k| Complex64::new(x[k], x[n + k])).collect())
    }

    pub fn to_real_split(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self.coefficients.iter().map(|c| c.re).collect();
        x.extend(self.coefficients.iter().map(|c| c.im));
        x
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn modes(&self) -> usize {
        self.coefficients.len()
    }

    /// Derivative of order `order` of the series at `ν`.
    fn series(&self, nu: f64, order: u32) -> f64 {
        let mut acc = if order == 0 { self.coefficients[0].re } else { 0.0 };
        for (k, c) in self.coefficients.iter().enumerate().skip(1) {
            let kf = k as f64;
            let d = Complex64::new(0.0, kf).powu(order);
            acc += 2.0 * (c * d * Complex64::from_polar(1.0, kf * nu)).re;
        }
        acc
    }

    pub fn evaluate(&self, nu: f64) -> f64 {
        self.series(nu, 0)
    }

    /// `σ′(ν)`, from the coefficients.
    pub fn derivative(&self, nu: f64) -> f64 {
        self.series(nu, 1)
    }

    /// `σ″(ν)`.
    pub fn second_derivative(&self, nu: f64) -> f64 {
        self.series(nu, 2)
    }

    /// `σ(ν) + σ″(ν) = Σ (1 − k²) σ_k e^{ikν}`, the reciprocal curvature of
    /// `∂W_σ`.
    pub fn stiffness(&self, nu: f64) -> f64 {
        let mut acc = self.coefficients[0].re;
        for (k, c) in self.coefficients.iter().enumerate().skip(2) {
            let kf = k as f64;
            acc += 2.0 * (1.0 - kf * kf) * (c * Complex64::from_polar(1.0, kf * nu)).re;
        }
        acc
    }

    /// Mean value `σ₀`.
    pub fn average(&self) -> f64 {
        self.coefficients[0].re
    }

    /// `|W_σ| = πσ₀² + 2π Σ (1 − k²)|σ_k|²`; negative values are returned
    /// as they are.
    pub fn wulff_area(&self) -> f64 {
        let mut a = PI * self.coefficients[0].re.powi(2);
        for (k, c) in self.coefficients.iter().enumerate().skip(1) {
            let kf = k as f64;
            a += 2.0 * PI * (1.0 - kf * kf) * c.norm_sqr();
        }
        a
    }

    pub fn scale(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::NonpositiveScale(t));
        }
        Ok(Self { coefficients: self.coefficients.iter().map(|c| c * t).collect() })
    }

    /// `σ(ν − θ)`: the anisotropy of a curve rotated by `θ`.
    pub fn rotated(&self, theta: f64) -> Self {
        Self {
            coefficients: self
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| c * Complex64::from_polar(1.0, -(k as f64) * theta))
                .collect(),
        }
    }

    /// Copy with `modes` coefficients, truncating or padding with zeros.
    pub fn with_modes(&self, modes: usize) -> Self {
        let mut c = self.coefficients.clone();
        c.resize(modes.max(1), Complex64::new(0.0, 0.0));
        Self { coefficients: c }
    }

    /// Copy rescaled to unit Wulff area.
    pub fn normalized_area(&self) -> Result<Self> {
        let a = self.wulff_area();
        if !(a > 0.0) {
            return Err(Error::NonpositiveWulffArea(a));
        }
        self.scale(a.powf(-0.5))
    }

    pub fn geometry(&self, samples: usize) -> Result<WulffGeometry> {
        wulff_geometry(self, samples)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Uniform grid `ν_i = 2πi/(samples − 1)`, both ends included.
pub fn closed_grid(samples: usize) -> Vec<f64> {
    (0..samples).map(|i| 2.0 * PI * i as f64 / (samples - 1) as f64).collect()
}

/// Sampled Wulff boundary, Frank diagram and reciprocal curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WulffGeometry {
    pub nu: Vec<f64>,
    pub boundary: Vec<Point>,
    pub frank_diagram: Vec<Point>,
    #[serde(rename = "kappa_inv")]
    pub curvature_reciprocal: Vec<f64>,
}

impl WulffGeometry {
    /// Shoelace area of the sampled boundary.
    pub fn boundary_area(&self) -> f64 {
        let v = &self.boundary[..self.boundary.len() - 1];
        let k = v.len();
        0.5 * (0..k).map(|j| v[j][0] * v[(j + 1) % k][1] - v[j][1] * v[(j + 1) % k][0]).sum::<f64>()
    }
}

pub fn wulff_geometry(sigma: &AnisotropyFunction, samples: usize) -> Result<WulffGeometry> {
    if samples < 16 {
        return Err(Error::InvalidProblem(format!("need at least 16 samples, got {samples}")));
    }
    let nu = closed_grid(samples);
    let mut boundary = Vec::with_capacity(samples);
    let mut frank = Vec::with_capacity(samples);
    let mut kinv = Vec::with_capacity(samples);
    for &v in &nu {
        let s = sigma.evaluate(v);
        if !(s > 0.0) {
            return Err(Error::NonpositiveSigma(v));
        }
        let ds = sigma.derivative(v);
        let (sn, cs) = v.sin_cos();
        let n = [-sn, cs];
        let t = [cs, sn];
        boundary.push([-s * n[0] + ds * t[0], -s * n[1] + ds * t[1]]);
        frank.push([-n[0] / s, -n[1] / s]);
        kinv.push(sigma.stiffness(v));
    }
    Ok(WulffGeometry { nu, boundary, frank_diagram: frank, curvature_reciprocal: kinv })
}

/// `L_σ(Γ) = c₀σ₀ + 2 Re Σ conj(c_k) σ_k`.
pub fn interface_energy(sigma: &AnisotropyFunction, spectrum: &CurveSpectrum) -> Result<f64> {
    let n = sigma.modes();
    if spectrum.coefficients.len() < n {
        return Err(Error::ModeMismatch { needed: n, available: spectrum.coefficients.len() });
    }
    let c = &spectrum.coefficients;
    let s = sigma.coefficients();
    let mut e = c[0].re * s[0].re;
    for k in 1..n {
        e += 2.0 * (c[k].conj() * s[k]).re;
    }
    Ok(e)
}

/// `Π_σ(Γ) = L_σ(Γ)² / (4 |W_σ| 𝒜(Γ))`.
pub fn anisoperimetric_ratio(sigma: &AnisotropyFunction, spectrum: &CurveSpectrum) -> Result<f64> {
    let w = sigma.wulff_area();
    if !(w > 0.0) {
        return Err(Error::NonpositiveWulffArea(w));
    }
    if !(spectrum.enclosed_area > 0.0) {
        return Err(Error::InvalidProblem(format!("enclosed area {} is not positive", spectrum.enclosed_area)));
    }
    let l = interface_energy(sigma, spectrum)?;
    Ok(l * l / (4.0 * w * spectrum.enclosed_area))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 0.99 / 8.0;

    #[test]
    fn kobayashi_values() {
        let mu = AnisotropyFunction::kobayashi(EPS, 3, 4);
        assert!((mu.evaluate(0.0) - 1.12375).abs() < 1e-12);
        assert!((mu.evaluate(PI / 3.0) - 0.87625).abs() < 1e-12);
        assert!((mu.stiffness(0.0) - 0.01).abs() < 1e-12);
        assert!((mu.average() - 1.0).abs() < 1e-15);
        assert!((mu.wulff_area() - PI * (1.0 - 4.0 * EPS * EPS)).abs() < 1e-12);
        // ½∫(σ² − σ′²) dν by the trapezoid rule
        let k = 4096;
        let h = 2.0 * PI / k as f64;
        let quad: f64 = (0..k).map(|i| {
            let nu = i as f64 * h;
            0.5 * (mu.evaluate(nu).powi(2) - mu.derivative(nu).powi(2)) * h
        }).sum();
        assert!((mu.wulff_area() - quad).abs() < 1e-12);
        assert!((mu.wulff_area() - 2.9491504686).abs() < 1e-9);
    }

    #[test]
    fn first_harmonic_has_no_stiffness_or_area() {
        let s = AnisotropyFunction::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.1, 0.0)]).unwrap();
        for nu in [0.0, 0.4, 2.0] {
            assert!((s.stiffness(nu) - 1.0).abs() < 1e-15);
            assert!((s.evaluate(nu) - (1.0 + 0.2 * nu.cos())).abs() < 1e-15);
        }
        assert!((s.wulff_area() - PI).abs() < 1e-15);
    }

    #[test]
    fn constant_geometry_is_a_circle() {
        let g = wulff_geometry(&AnisotropyFunction::constant(1.0, 3), 360).unwrap();
        for (p, f) in g.boundary.iter().zip(&g.frank_diagram) {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-14);
            assert!((f[0].hypot(f[1]) - 1.0).abs() < 1e-14);
        }
        let (a, b) = (g.boundary[0], g.boundary[359]);
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn kobayashi_boundary_area() {
        let mu = AnisotropyFunction::kobayashi(EPS, 3, 4);
        let g = mu.geometry(2000).unwrap();
        assert!((g.boundary_area() / mu.wulff_area() - 1.0).abs() < 5e-3);
    }

    #[test]
    fn nonpositive_sigma_rejected() {
        let s = AnisotropyFunction::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)]).unwrap();
        // σ(π) = 0 lies on the grid
        assert!(matches!(wulff_geometry(&s, 361), Err(Error::NonpositiveSigma(_))));
        assert!(wulff_geometry(&s, 8).is_err());
    }

    #[test]
    fn scale_and_ratio() {
        let one = AnisotropyFunction::constant(1.0, 2);
        assert!((one.scale(2.0).unwrap().wulff_area() - 4.0 * PI).abs() < 1e-12);
        assert!(one.scale(0.0).is_err());
        let sq = CurveSpectrum {
            modes: 2,
            length: 4.0,
            enclosed_area: 1.0,
            coefficients: vec![Complex64::new(4.0, 0.0), Complex64::new(0.0, 0.0)],
        };
        assert!((interface_energy(&one, &sq).unwrap() - 4.0).abs() < 1e-15);
        assert!((anisoperimetric_ratio(&one, &sq).unwrap() - 4.0 / PI).abs() < 1e-12);
        let long = AnisotropyFunction::constant(1.0, 3);
        assert!(matches!(interface_energy(&long, &sq), Err(Error::ModeMismatch { .. })));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let mu = AnisotropyFunction::kobayashi(EPS, 3, 5);
        assert_eq!(AnisotropyFunction::from_json(&mu.to_json().unwrap()).unwrap(), mu);
        assert!(AnisotropyFunction::from_json(r#"{"modes":1,"coefficients":[[1.0,0.5]]}"#).is_err());
        assert!(AnisotropyFunction::from_json(r#"{"modes":2,"coefficients":[[1.0,0.0]]}"#).is_err());
    }
}
