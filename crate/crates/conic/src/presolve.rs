//! Detection of linearly dependent equality rows.

use log::warn;

use crate::program::ConicProgram;

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct RowSelection {
    pub keep: Vec<usize>,
    pub dropped: Vec<usize>,
    /// A dropped row whose right-hand side disagrees with the combination of
    /// kept rows that reproduces it.
    pub inconsistent: bool,
}

/// Greedy selection of a maximal independent subset of rows, in row order.
///
/// Works on the Gram matrix of the unit-normalized rows with an incremental
/// Cholesky factor; a row is dependent when its squared distance to the span
/// of the rows kept so far is below `tol`.
pub(crate) fn independent_rows(program: &ConicProgram, tol: f64) -> RowSelection {
    let m = program.rows.len();
    let norms: Vec<f64> = program.rows.iter().map(|r| r.norm()).collect();
    let mut sel = RowSelection::default();
    // rows of the lower-triangular factor of the kept Gram block
    let mut factor: Vec<Vec<f64>> = Vec::new();
    let mut kept_rhs: Vec<f64> = Vec::new();

    for k in 0..m {
        if norms[k] == 0.0 {
            sel.dropped.push(k);
            if program.rhs[k].abs() > tol.sqrt() {
                sel.inconsistent = true;
            }
            continue;
        }
        let g: Vec<f64> = sel
            .keep
            .iter()
            .map(|&i| program.rows[i].dot_row(&program.rows[k]) / (norms[i] * norms[k]))
            .collect();
        // forward solve L l = g
        let mut l = vec![0.0; g.len()];
        for i in 0..g.len() {
            let s: f64 = (0..i).map(|j| factor[i][j] * l[j]).sum();
            l[i] = (g[i] - s) / factor[i][i];
        }
        let d = 1.0 - l.iter().map(|v| v * v).sum::<f64>();
        let bk = program.rhs[k] / norms[k];
        if d > tol {
            let mut row = l;
            row.push(d.sqrt());
            factor.push(row);
            sel.keep.push(k);
            kept_rhs.push(bk);
        } else {
            // back solve Lᵀ λ = l for the combination coefficients
            let r = l.len();
            let mut lambda = vec![0.0; r];
            for i in (0..r).rev() {
                let s: f64 = (i + 1..r).map(|j| factor[j][i] * lambda[j]).sum();
                lambda[i] = (l[i] - s) / factor[i][i];
            }
            let predicted: f64 = lambda.iter().zip(&kept_rhs).map(|(a, b)| a * b).sum();
            let scale = 1.0 + bk.abs() + kept_rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if (predicted - bk).abs() > 1e-7 * scale {
                sel.inconsistent = true;
            }
            sel.dropped.push(k);
        }
    }
    if !sel.dropped.is_empty() {
        warn!("presolve dropped {} linearly dependent equality rows", sel.dropped.len());
    }
    sel
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{Cone, SparseRow};

    fn program(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> ConicProgram {
        let n = rows[0].len();
        let rows = rows
            .into_iter()
            .map(|r| {
                let mut s = SparseRow::default();
                for (i, v) in r.into_iter().enumerate() {
                    if v != 0.0 {
                        s.idx.push(i);
                        s.val.push(v);
                    }
                }
                s
            })
            .collect();
        ConicProgram { cost: vec![0.0; n], rows, rhs, cones: vec![Cone::Free(n)] }
    }

    #[test]
    fn drops_consistent_duplicate() {
        let p = program(vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0], vec![2.0, 4.0, 2.0]], vec![1.0, 2.0, 6.0]);
        let sel = independent_rows(&p, 1e-12);
        assert_eq!(sel.keep, vec![0, 1]);
        assert_eq!(sel.dropped, vec![2]);
        assert!(!sel.inconsistent);
    }

    #[test]
    fn flags_inconsistent_duplicate() {
        let p = program(vec![vec![1.0, 0.0], vec![2.0, 0.0]], vec![1.0, 3.0]);
        let sel = independent_rows(&p, 1e-12);
        assert_eq!(sel.dropped, vec![1]);
        assert!(sel.inconsistent);
    }

    #[test]
    fn keeps_independent_rows() {
        let p = program(vec![vec![1.0, 0.0], vec![1.0, 1e-3]], vec![0.0, 0.0]);
        let sel = independent_rows(&p, 1e-12);
        assert_eq!(sel.keep, vec![0, 1]);
    }
}
