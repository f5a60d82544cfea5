//! Small dense helpers on top of nalgebra: a Cholesky that reports the
//! failing pivot, triangular solves, and extreme eigenvalues.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Lower Cholesky factor of `a + jitter * I`, or the index of the first
/// non-positive pivot.
pub fn cholesky_lower(a: &DMatrix<f64>, jitter: f64) -> Result<DMatrix<f64>, usize> {
    let mut shifted = a.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += jitter;
    }
    if shifted.iter().any(|v| !v.is_finite()) {
        return Err(0);
    }
    match nalgebra::Cholesky::new(shifted.clone()).map(|c| c.unpack()) {
        Some(l) if l.diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) => Ok(l),
        _ => Err(failing_pivot(&shifted)),
    }
}

/// Unblocked left-looking Cholesky, only used to name the failing pivot.
fn failing_pivot(a: &DMatrix<f64>) -> usize {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return j;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    n.saturating_sub(1)
}

/// Solves `L x = b` in place for lower-triangular `L`.
pub fn forward_solve(l: &DMatrix<f64>, b: &mut DVector<f64>) {
    l.solve_lower_triangular_mut(b);
}

/// Solves `L^T x = b` in place for lower-triangular `L`.
pub fn backward_solve_transpose(l: &DMatrix<f64>, b: &mut DVector<f64>) {
    l.tr_solve_lower_triangular_mut(b);
}

/// Solves `(L L^T) x = b`.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut x = b.clone();
    forward_solve(l, &mut x);
    backward_solve_transpose(l, &mut x);
    x
}

pub fn logdet_from_cholesky(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
