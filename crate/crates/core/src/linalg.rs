//! Dense pseudo-inverse helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

fn cutoff(sv: &DVector<f64>, rows: usize, cols: usize) -> f64 {
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    smax * rows.max(cols) as f64 * f64::EPSILON
}

/// Minimum-norm least-squares solution of `a x = b` and the numerical rank of `a`.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, usize) {
    if a.ncols() == 0 {
        return (DVector::zeros(0), 0);
    }
    let svd = a.clone().svd(true, true);
    let tol = cutoff(&svd.singular_values, a.nrows(), a.ncols());
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd.solve(b, tol).expect("u and v were computed");
    (x, rank)
}

/// Moore-Penrose pseudo-inverse.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let tol = cutoff(&svd.singular_values, a.nrows(), a.ncols());
    svd.pseudo_inverse(tol).expect("u and v were computed")
}

/// Pseudo-inverse of a symmetric positive semidefinite matrix via its eigendecomposition.
pub fn sym_pinv(a: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let n = a.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), 0);
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = lmax * n as f64 * f64::EPSILON * 16.0;
    let mut out = DMatrix::zeros(n, n);
    let mut rank = 0;
    for (idx, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > tol {
            rank += 1;
            let v = eig.eigenvectors.column(idx);
            out += (v * v.transpose()) / l;
        }
    }
    (out, rank)
}

pub fn matrix_rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.singular_values();
    let tol = cutoff(&sv, a.nrows(), a.ncols());
    sv.iter().filter(|&&s| s > tol).count()
}
