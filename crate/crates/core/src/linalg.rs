//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
/// Returns the inverse and the numerical rank.
pub fn pinv(x: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let (rows, cols) = x.shape();
    if rows == 0 || cols == 0 {
        return (DMatrix::zeros(cols, rows), 0);
    }
    let svd = x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s_max = svd.singular_values.max();
    let cutoff = rel_tol * s_max;
    let mut out = DMatrix::zeros(cols, rows);
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            out += (v_t.row(i).transpose() / s) * u.column(i).transpose();
        }
    }
    (out, rank)
}

pub fn rank(x: &DMatrix<f64>, rel_tol: f64) -> usize {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0;
    }
    let s = x.singular_values();
    let cutoff = rel_tol * s.max();
    s.iter().filter(|&&v| v > cutoff && v > 0.0).count()
}

/// Orthonormal basis of the column space of `x`, one vector per retained
/// singular value.
pub fn range_basis(x: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Vec::new();
    }
    let svd = x.clone().svd(true, false);
    let u = svd.u.as_ref().expect("u requested");
    let cutoff = rel_tol * svd.singular_values.max();
    let mut pairs: Vec<(f64, usize)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cutoff && s > 0.0)
        .map(|(i, &s)| (s, i))
        .collect();
    // Deterministic order: largest singular value first.
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    pairs.into_iter().map(|(_, i)| u.column(i).into_owned()).collect()
}

/// Largest absolute entry.
pub fn max_abs(x: &DMatrix<f64>) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn max_abs_vec(x: &DVector<f64>) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
