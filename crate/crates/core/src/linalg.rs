//! Small dense linear-algebra helpers on top of nalgebra.
//!
//! Orthonormal bases of column spaces, null spaces and orthogonal
//! complements are all read off a full SVD. nalgebra only returns the thin
//! factors, so the input is zero-padded to a square matrix first.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

/// Singular values (unordered) of `a`; empty when `a` has no entries.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    SVD::new(a.clone(), false, false).singular_values
}

pub fn max_singular_value(a: &DMatrix<f64>) -> f64 {
    singular_values(a).iter().cloned().fold(0.0, f64::max)
}

/// `max(rows, cols) · ε · σ_max`, the usual numerical-rank threshold.
pub fn rank_tol(a: &DMatrix<f64>) -> f64 {
    let dim = a.nrows().max(a.ncols()) as f64;
    dim * f64::EPSILON * max_singular_value(a)
}

/// Number of singular values strictly above `tol`.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn orth(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let rows = a.nrows();
    if rows == 0 || a.ncols() == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let padded = if a.ncols() < rows {
        let mut p = DMatrix::zeros(rows, rows);
        p.view_mut((0, 0), (rows, a.ncols())).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, true, false);
    let u = svd.u.expect("u requested");
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(i, _)| i)
        .collect();
    u.select_columns(keep.iter())
}

/// Orthonormal basis (as columns) of `{x : a x = 0}`.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let cols = a.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let padded = if a.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| i)
        .collect();
    v_t.select_rows(keep.iter()).transpose()
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q` inside `R^{q.nrows()}`.
pub fn orth_complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    if q.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    null_space(&q.transpose(), 1e-9)
}

/// Orthonormal basis of `span(s) ∩ span(t)`, both given by orthonormal columns.
pub fn intersect(s: &DMatrix<f64>, t: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = s.nrows();
    if s.ncols() == 0 || t.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    // x = s y with (I − t tᵀ) s y = 0
    let resid = s - t * (t.transpose() * s);
    let y = null_space(&resid, tol);
    orth(&(s * y), tol)
}

/// Max-abs deviation of `qᵀq` from the identity.
pub fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
    let g = q.transpose() * q;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Block-diagonal stacking.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `log det` of an SPD matrix via Cholesky; `None` when factorization fails.
pub fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(0.0);
    }
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    Some(2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Spectral condition number of a symmetric matrix (∞ when not PD).
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    Cholesky::new(m.clone()).map(|c| c.inverse())
}

/// Sub-matrix of rows `r0..r0+len` (all columns).
pub fn row_block(m: &DMatrix<f64>, r0: usize, len: usize) -> DMatrix<f64> {
    m.rows(r0, len).into_owned()
}

pub fn col_block(m: &DMatrix<f64>, c0: usize, len: usize) -> DMatrix<f64> {
    m.columns(c0, len).into_owned()
}
