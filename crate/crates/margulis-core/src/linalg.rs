//! Small dense helpers shared by the other modules.

use nalgebra::SVD;

use crate::{Matrix, Vector};

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Columns scaled to unit Euclidean norm. Zero columns are left alone.
pub fn normalize_columns(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    out
}

/// Orthonormal basis of the kernel of `m`, from a full SVD.
///
/// A singular value counts as zero when it is below `rel_tol` times the largest one.
pub fn null_space(m: &Matrix, rel_tol: f64) -> Matrix {
    let ncols = m.ncols();
    if m.nrows() == 0 {
        return Matrix::identity(ncols, ncols);
    }
    let rows = m.nrows().max(ncols);
    let mut padded = Matrix::zeros(rows, ncols);
    padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = rel_tol * smax.max(f64::MIN_POSITIVE);
    let cols: Vec<Vector> = (0..sv.len())
        .filter(|&i| sv[i] <= cut)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        Matrix::zeros(ncols, 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// Orthonormal basis for the column span of a full-rank matrix.
pub fn orthonormalize(m: &Matrix) -> Matrix {
    if m.ncols() == 0 {
        return m.clone();
    }
    let qr = m.clone().qr();
    qr.q().columns(0, m.ncols()).into_owned()
}

/// Top `k` left singular vectors of `m` together with all singular values.
pub fn dominant_span(m: &Matrix, k: usize) -> (Matrix, Vec<f64>) {
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("u requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let cols: Vec<Vector> = idx[..k].iter().map(|&i| u.column(i).into_owned()).collect();
    let sv = idx.iter().map(|&i| svd.singular_values[i]).collect();
    (Matrix::from_columns(&cols), sv)
}

/// Minimum-norm least-squares solution of `a x = b` and its residual norm.
pub fn lstsq(a: &Matrix, b: &Vector) -> (Vector, f64) {
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = 1e-13 * smax.max(f64::MIN_POSITIVE);
    let x = svd.solve(b, eps).expect("u and v_t requested");
    let r = (a * &x - b).norm();
    (x, r)
}

/// Induced infinity norm (largest absolute row sum).
pub fn norm_inf(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Sign of the determinant of the matrix with the given columns.
pub fn det_sign(cols: &[&Matrix]) -> f64 {
    let n = cols[0].nrows();
    let total: usize = cols.iter().map(|c| c.ncols()).sum();
    assert_eq!(n, total, "determinant needs a square matrix");
    let mut m = Matrix::zeros(n, n);
    let mut j = 0;
    for c in cols {
        m.view_mut((0, j), (n, c.ncols())).copy_from(*c);
        j += c.ncols();
    }
    m.determinant().signum()
}

/// Scales `v` to unit Euclidean norm with its first significant coordinate positive.
pub fn canonical_unit(v: &Vector) -> Vector {
    let n = v.norm();
    let mut u = v / n;
    let thr = 1e-10 * u.amax();
    if let Some(first) = u.iter().find(|x| x.abs() > thr) {
        if *first < 0.0 {
            u = -u;
        }
    }
    u
}
