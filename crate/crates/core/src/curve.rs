//! Closed polygonal curves and their tangent-angle spectrum.
//!
//! For a closed curve `Γ` with tangent angle `ν` (unit tangent
//! `t = (cos ν, sin ν)`, inward normal `n = (−sin ν, cos ν)`) the spectrum is
//!
//! ```txt
//!     c_k = ∫_Γ e^{−ikν} ds
//! ```
//!
//! approximated on a polygon by central differences,
//! `c_k ≈ ½ Σ_j (t₁ʲ − i t₂ʲ)^k ‖x^{j+1} − x^{j−1}‖`, indices taken modulo
//! the vertex count.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// A closed polygon with counter-clockwise orientation.
///
/// Self-intersections are not detected; callers must supply Jordan curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonalCurve {
    vertices: Vec<Point>,
}

impl PolygonalCurve {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area, positive for the normalized orientation.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Sum of edge lengths.
    pub fn perimeter(&self) -> f64 {
        let k = self.vertices.len();
        (0..k).map(|j| dist(self.vertices[j], self.vertices[(j + 1) % k])).sum()
    }

    /// Copy rotated by `theta` about the origin.
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { vertices: self.vertices.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect() }
    }

    pub fn translated(&self, d: Point) -> Self {
        Self { vertices: self.vertices.iter().map(|p| [p[0] + d[0], p[1] + d[1]]).collect() }
    }

    /// Copy scaled by `t` about the origin; `t` must be positive.
    pub fn scaled(&self, t: f64) -> Self {
        assert!(t > 0.0);
        Self { vertices: self.vertices.iter().map(|p| [t * p[0], t * p[1]]).collect() }
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn signed_area(v: &[Point]) -> f64 {
    let k = v.len();
    let mut s = 0.0;
    for j in 0..k {
        let (a, b) = (v[j], v[(j + 1) % k]);
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

/// Builds a curve from its vertices.
///
/// A closing vertex repeating the first one (up to rounding) is dropped and
/// clockwise input is reversed.
pub fn load_curve(points: &[Point]) -> Result<PolygonalCurve> {
    if let Some(j) = points.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::NonFinite(j));
    }
    let mut v = points.to_vec();
    if v.len() >= 2 {
        let scale = v.iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
        if dist(v[0], v[v.len() - 1]) <= 1e-12 * scale {
            v.pop();
        }
    }
    if v.len() < 3 {
        return Err(Error::TooFewVertices(v.len()));
    }
    let k = v.len();
    for j in 0..k {
        if v[j] == v[(j + 1) % k] {
            return Err(Error::DegenerateEdge(j, (j + 1) % k));
        }
    }
    if signed_area(&v) < 0.0 {
        v.reverse();
    }
    Ok(PolygonalCurve { vertices: v })
}

/// Unit tangent at each vertex from the central difference of its neighbours.
pub fn tangents(curve: &PolygonalCurve) -> Result<Vec<Point>> {
    let v = &curve.vertices;
    let k = v.len();
    (0..k)
        .map(|j| {
            let (a, b) = (v[(j + k - 1) % k], v[(j + 1) % k]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let len = d[0].hypot(d[1]);
            if len == 0.0 {
                return Err(Error::DegenerateChord(j));
            }
            Ok([d[0] / len, d[1] / len])
        })
        .collect()
}

/// Tangent-angle spectrum of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpectrum {
    pub modes: usize,
    /// Curve length, equal to `c₀`.
    pub length: f64,
    /// Enclosed area.
    #[serde(rename = "area")]
    pub enclosed_area: f64,
    /// `c₀ … c_{N−1}`, serialized as `[re, im]` pairs.
    pub coefficients: Vec<Complex64>,
}

impl CurveSpectrum {
    /// Keeps the first `modes` coefficients.
    pub fn truncated(&self, modes: usize) -> Result<Self> {
        if modes > self.modes {
            return Err(Error::ModeMismatch { needed: modes, available: self.modes });
        }
        Ok(Self { modes, coefficients: self.coefficients[..modes].to_vec(), ..self.clone() })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        if s.coefficients.len() != s.modes || s.modes == 0 {
            return Err(Error::Parse(format!("{} coefficients for {} modes", s.coefficients.len(), s.modes)));
        }
        Ok(s)
    }
}

pub fn spectrum(curve: &PolygonalCurve, modes: usize) -> Result<CurveSpectrum> {
    if modes == 0 {
        return Err(Error::InvalidProblem("spectrum needs at least one mode".into()));
    }
    let t = tangents(curve)?;
    let v = &curve.vertices;
    let k = v.len();
    let mut c = vec![Complex64::new(0.0, 0.0); modes];
    for j in 0..k {
        let w = 0.5 * dist(v[(j + k - 1) % k], v[(j + 1) % k]);
        let z = Complex64::new(t[j][0], -t[j][1]);
        let mut p = Complex64::new(w, 0.0);
        for ck in c.iter_mut() {
            *ck += p;
            p *= z;
        }
    }
    c[0].im = 0.0;
    Ok(CurveSpectrum { modes, length: c[0].re, enclosed_area: curve.area(), coefficients: c })
}

/// Reads `x,y` pairs, one per line. A non-numeric first line is skipped as a
/// header.
pub fn parse_points_csv<R: Read>(reader: R) -> Result<Vec<Point>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(reader);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let nums: Option<Vec<f64>> = rec.iter().map(|f| f.parse::<f64>().ok()).collect();
        match nums {
            Some(n) if n.len() == 2 => out.push([n[0], n[1]]),
            None if line == 0 => continue,
            _ => return Err(Error::Parse(format!("line {}: expected two numbers", line + 1))),
        }
    }
    Ok(out)
}

pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<PolygonalCurve> {
    let f = std::fs::File::open(path)?;
    load_curve(&parse_points_csv(f)?)
}

pub fn write_points_csv<W: Write>(writer: W, points: &[Point]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.write_record([format!("{:.17e}", p[0]), format!("{:.17e}", p[1])])?;
    }
    w.flush()?;
    Ok(())
}
