//! Small dense linear-algebra helpers built on nalgebra's SVD.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Minimum-norm least-squares solution of `A x = b`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub x: DVector<f64>,
    pub rank: usize,
    /// `||A x - b||`.
    pub residual: f64,
}

/// Solves `A x = b` in the least-squares sense, discarding singular values
/// below `rel_tol * sigma_max`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> LeastSquares {
    let n = a.ncols();
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.max();
    let mut x = DVector::zeros(n);
    let mut rank = 0;
    if smax > 0.0 {
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > rel_tol * smax {
                rank += 1;
                let coef = u.column(i).dot(b) / s;
                x += vt.row(i).transpose() * coef;
            }
        }
    }
    let residual = (a * &x - b).norm();
    LeastSquares { x, rank, residual }
}

/// Full singular value decomposition data of `A` padded with zero rows so
/// that all right singular vectors are available. Singular values are
/// returned in decreasing order together with the matching columns of `V`.
pub fn right_singular(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.ncols();
    let padded = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = DMatrix::from_fn(n, order.len(), |r, c| vt[(order[c], r)]);
    (values, v)
}

/// Orthonormal basis (as columns) of the numerical null space of `A`.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (values, v) = right_singular(a);
    let smax = values.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..values.len())
        .filter(|&i| smax == 0.0 || values[i] <= rel_tol * smax)
        .collect();
    DMatrix::from_fn(a.ncols(), keep.len(), |r, c| v[(r, keep[c])])
}

/// Numerical rank of `A`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = a.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Smallest singular value and its right singular vector.
pub fn smallest_singular(a: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let (values, v) = right_singular(a);
    let last = values.len() - 1;
    (values[last], v.column(last).into_owned())
}

/// Frobenius norm of a matrix.
pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.norm()
}
