//! Standard-form conic programs.
//!
//! ```txt
//!     min  cᵀz
//!     s.t. A z = b
//!          z ∈ K = K₁ × K₂ × … × K_p
//! ```
//!
//! Each block `K_i` is either free, a nonnegative orthant or a cone of
//! positive semidefinite matrices. PSD blocks are scalarized with the
//! symmetric vectorization `svec`, which stores the lower triangle column by
//! column and scales off-diagonal entries by √2 so that `⟨A, B⟩ =
//! svec(A)ᵀ svec(B)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::SolverError;

/// One block of the cone structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "dim", rename_all = "lowercase")]
pub enum Cone {
    Free(usize),
    Nonneg(usize),
    /// Symmetric matrices of the given order; occupies `n(n+1)/2` scalars.
    Psd(usize),
}

impl Cone {
    /// Number of scalar variables the block occupies.
    pub fn scalar_dim(&self) -> usize {
        match *self {
            Cone::Free(n) | Cone::Nonneg(n) => n,
            Cone::Psd(n) => n * (n + 1) / 2,
        }
    }

    /// Barrier degree contributed to the complementarity measure.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Free(_) => 0,
            Cone::Nonneg(n) | Cone::Psd(n) => n,
        }
    }
}

/// Length of `svec` for an `n × n` symmetric matrix.
pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry `(i, j)` inside `svec` of an `n × n` matrix.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    debug_assert!(r < n);
    c * (2 * n - c + 1) / 2 + (r - c)
}

/// A sparse row of the equality operator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseRow {
    pub fn dot(&self, z: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(&i, &v)| v * z[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dot product of two rows with sorted indices.
    pub fn dot_row(&self, other: &SparseRow) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.idx.len() && b < other.idx.len() {
            match self.idx[a].cmp(&other.idx[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.val[a] * other.val[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }
}

/// Accumulates coefficients of one constraint row, merging repeated indices.
#[derive(Debug, Clone, Default)]
pub struct RowBuilder {
    terms: BTreeMap<usize, f64>,
}

impl RowBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, idx: usize, coef: f64) -> &mut Self {
        if coef != 0.0 {
            *self.terms.entry(idx).or_insert(0.0) += coef;
        }
        self
    }

    /// Adds `coef · M_ij` for the PSD block `block`.
    pub fn add_entry(&mut self, block: PsdBlock, i: usize, j: usize, coef: f64) -> &mut Self {
        let (idx, scale) = block.entry(i, j);
        self.add(idx, coef * scale)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.values().all(|v| *v == 0.0)
    }

    pub fn build(self) -> SparseRow {
        let mut row = SparseRow::default();
        for (i, v) in self.terms {
            if v != 0.0 {
                row.idx.push(i);
                row.val.push(v);
            }
        }
        row
    }
}

/// Handle to a PSD block inside a program under construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsdBlock {
    pub offset: usize,
    pub dim: usize,
}

impl PsdBlock {
    /// Scalar index and factor such that `M_ij = factor · z[index]`.
    ///
    /// Off-diagonal entries are stored as `√2 · M_ij`, so reading one back
    /// carries a factor `1/√2`.
    pub fn entry(&self, i: usize, j: usize) -> (usize, f64) {
        let idx = self.offset + svec_index(self.dim, i, j);
        let scale = if i == j { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
        (idx, scale)
    }

    /// Unpacks this block of a scalar vector into a dense symmetric matrix.
    pub fn matrix(&self, z: &[f64]) -> nalgebra::DMatrix<f64> {
        crate::linalg::smat(&z[self.offset..self.offset + svec_len(self.dim)], self.dim)
    }
}

/// Handle to a contiguous run of scalar variables (free or orthant).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VectorBlock {
    pub offset: usize,
    pub dim: usize,
}

impl VectorBlock {
    pub fn index(&self, i: usize) -> usize {
        debug_assert!(i < self.dim);
        self.offset + i
    }

    pub fn slice<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        &z[self.offset..self.offset + self.dim]
    }
}

/// A linear conic program in standard form.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<SparseRow>,
    pub rhs: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConicProgram {
    /// Total number of scalar variables.
    pub fn num_vars(&self) -> usize {
        self.cones.iter().map(Cone::scalar_dim).sum()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Offsets of each block in the scalar vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cones.len());
        let mut off = 0;
        for c in &self.cones {
            out.push(off);
            off += c.scalar_dim();
        }
        out
    }

    /// `A z`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(z)).collect()
    }

    /// `Aᵀ y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars()];
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for (&j, &v) in row.idx.iter().zip(&row.val) {
                out[j] += v * yi;
            }
        }
        out
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        self.cost.iter().zip(z).map(|(c, z)| c * z).sum()
    }

    /// Checks dimensions and index ranges.
    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        if self.cost.len() != n {
            return Err(SolverError::Malformed(format!(
                "cost has length {} but the cones hold {} scalars",
                self.cost.len(),
                n
            )));
        }
        if self.rows.len() != self.rhs.len() {
            return Err(SolverError::Malformed(format!(
                "{} rows but {} right-hand side entries",
                self.rows.len(),
                self.rhs.len()
            )));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.idx.len() != row.val.len() {
                return Err(SolverError::Malformed(format!("row {r}: index/value length mismatch")));
            }
            if row.idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SolverError::Malformed(format!("row {r}: indices not strictly increasing")));
            }
            if row.idx.last().is_some_and(|&i| i >= n) {
                return Err(SolverError::Malformed(format!("row {r}: index out of range")));
            }
            if row.val.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::Malformed(format!("row {r}: non-finite coefficient")));
            }
        }
        if self.cost.iter().chain(&self.rhs).any(|v| !v.is_finite()) {
            return Err(SolverError::Malformed("non-finite cost or right-hand side".into()));
        }
        Ok(())
    }
}

/// Incremental construction of a [`ConicProgram`].
#[derive(Debug, Clone, Default)]
pub struct ProgramBuilder {
    cones: Vec<Cone>,
    len: usize,
    cost: BTreeMap<usize, f64>,
    rows: Vec<SparseRow>,
    rhs: Vec<f64>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_free(&mut self, dim: usize) -> VectorBlock {
        self.push_vector(Cone::Free(dim))
    }

    pub fn add_nonneg(&mut self, dim: usize) -> VectorBlock {
        self.push_vector(Cone::Nonneg(dim))
    }

    pub fn add_psd(&mut self, dim: usize) -> PsdBlock {
        let block = PsdBlock { offset: self.len, dim };
        self.cones.push(Cone::Psd(dim));
        self.len += svec_len(dim);
        block
    }

    fn push_vector(&mut self, cone: Cone) -> VectorBlock {
        let block = VectorBlock { offset: self.len, dim: cone.scalar_dim() };
        self.cones.push(cone);
        self.len += cone.scalar_dim();
        block
    }

    pub fn num_vars(&self) -> usize {
        self.len
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `coef · z[idx]` to the objective.
    pub fn add_cost(&mut self, idx: usize, coef: f64) {
        *self.cost.entry(idx).or_insert(0.0) += coef;
    }

    /// Adds `coef · M_ij` to the objective. Off-diagonal entries appear twice
    /// in `⟨C, M⟩`; pass the full symmetric coefficient for each call.
    pub fn add_cost_entry(&mut self, block: PsdBlock, i: usize, j: usize, coef: f64) {
        let (idx, scale) = block.entry(i, j);
        self.add_cost(idx, coef * scale);
    }

    pub fn add_row(&mut self, row: RowBuilder, rhs: f64) -> usize {
        self.rows.push(row.build());
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    pub fn build(self) -> ConicProgram {
        let mut cost = vec![0.0; self.len];
        for (i, v) in self.cost {
            cost[i] = v;
        }
        ConicProgram { cost, rows: self.rows, rhs: self.rhs, cones: self.cones }
    }
}
