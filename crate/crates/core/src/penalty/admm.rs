//! Generalized lasso at a single lambda,
//! `1/2 ||y - Z beta||^2 + lambda ||D beta||_1`, by ADMM on the split
//! `D beta = w`, followed by an exact active-set polish that is accepted
//! only when it satisfies the optimality conditions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SkelError};
use crate::linalg::{lstsq_min_norm, sym_pinv};
use crate::regress::spline_fit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Attempt an active-set polish every this many iterations.
    pub polish_every: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200_000, polish_every: 50 }
    }
}

pub fn lasso_objective(z: &DMatrix<f64>, y: &[f64], d: &DMatrix<f64>, lambda: f64, beta: &DVector<f64>) -> f64 {
    let r = DVector::from_column_slice(y) - z * beta;
    0.5 * r.norm_squared() + lambda * (d * beta).abs().sum()
}

fn soft(v: f64, k: f64) -> f64 {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        0.0
    }
}

/// Solve on the face `{D_A beta = 0}` with signs fixed elsewhere; return the
/// candidate when it satisfies stationarity, dual feasibility and the sign
/// pattern, together with its stationarity residual.
fn polish(
    z: &DMatrix<f64>,
    y: &DVector<f64>,
    d: &DMatrix<f64>,
    lambda: f64,
    w: &DVector<f64>,
    scale: f64,
) -> Option<(DVector<f64>, f64)> {
    let k = d.ncols();
    let active: Vec<usize> = (0..d.nrows()).filter(|&r| w[r] == 0.0).collect();
    let free: Vec<usize> = (0..d.nrows()).filter(|&r| w[r] != 0.0).collect();
    let d_act = DMatrix::from_fn(active.len(), k, |r, c| d[(active[r], c)]);
    let signs = DVector::from_iterator(free.len(), free.iter().map(|&r| w[r].signum()));
    let d_free = DMatrix::from_fn(free.len(), k, |r, c| d[(free[r], c)]);

    // basis of null(D_A)
    let basis = if active.is_empty() {
        DMatrix::identity(k, k)
    } else {
        let gram = d_act.transpose() * &d_act;
        let eig = gram.symmetric_eigen();
        let lmax = eig.eigenvalues.amax().max(1.0);
        let cols: Vec<_> = (0..k)
            .filter(|&c| eig.eigenvalues[c].abs() <= 1e-10 * lmax)
            .map(|c| eig.eigenvectors.column(c).into_owned())
            .collect();
        if cols.is_empty() {
            DMatrix::zeros(k, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    };
    let zn = z * &basis;
    let rhs = basis.transpose() * (z.transpose() * y - d_free.transpose() * &signs * lambda);
    let (inv, _) = sym_pinv(&(zn.transpose() * &zn));
    let beta = &basis * (inv * rhs);

    let fitted = d_free.clone() * &beta;
    if fitted.iter().zip(signs.iter()).any(|(v, s)| v * s <= 0.0) {
        return None;
    }
    let grad = z.transpose() * (z * &beta - y) + d_free.transpose() * &signs * lambda;
    let (u_act, resid) = if active.is_empty() {
        (DVector::zeros(0), grad.amax())
    } else {
        let (u, _) = lstsq_min_norm(&d_act.transpose(), &(-&grad));
        let r = (d_act.transpose() * &u + &grad).amax();
        (u, r)
    };
    let feasible = u_act.iter().all(|v| v.abs() <= lambda * (1.0 + 1e-9) + 1e-12 * scale);
    (feasible && resid <= 1e-9 * scale).then_some((beta, resid))
}

/// Regression-form generalized lasso at one `lambda`, from a zero start.
pub fn gen_lasso_fixed_lambda(
    z: &DMatrix<f64>,
    y: &[f64],
    d: &DMatrix<f64>,
    lambda: f64,
    opts: &LassoOptions,
) -> Result<DVector<f64>> {
    if !(lambda >= 0.0) {
        return Err(SkelError::Config(format!("lambda must be nonnegative, got {lambda}")));
    }
    if z.nrows() != y.len() || d.ncols() != z.ncols() {
        return Err(SkelError::Shape("design, response and penalty sizes disagree".into()));
    }
    if y.iter().chain(z.iter()).chain(d.iter()).any(|v| !v.is_finite()) {
        return Err(SkelError::Shape("non-finite input".into()));
    }
    if lambda == 0.0 {
        return Ok(DVector::from_vec(spline_fit(z, y).beta));
    }
    let yv = DVector::from_column_slice(y);
    let ztz = z.transpose() * z;
    let zty = z.transpose() * &yv;
    let scale = zty.amax().max(lambda).max(1.0);
    let rho = (ztz.diagonal().mean()).max(1e-3);
    let (m_inv, _) = sym_pinv(&(&ztz + d.transpose() * d * rho));

    let mut w = DVector::zeros(d.nrows());
    let mut dual = DVector::zeros(d.nrows());
    let mut gap = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let beta = &m_inv * (&zty + d.transpose() * (&w - &dual) * rho);
        let dbeta = d * &beta;
        let w_old = w.clone();
        w = (&dbeta + &dual).map(|v| soft(v, lambda / rho));
        dual += &dbeta - &w;

        let primal = (&dbeta - &w).norm();
        let dual_res = (d.transpose() * (&w - &w_old)).norm() * rho;
        gap = primal.max(dual_res);

        if it % opts.polish_every == 0 {
            if let Some((b, _)) = polish(z, &yv, d, lambda, &w, scale) {
                return Ok(b);
            }
        }
        let eps = opts.tol * (1.0 + dbeta.norm().max(w.norm()).max(zty.norm()));
        if primal <= eps * 1e-2 && dual_res <= eps * 1e-2 {
            if let Some((b, _)) = polish(z, &yv, d, lambda, &w, scale) {
                return Ok(b);
            }
            return Ok(beta);
        }
    }
    Err(SkelError::Convergence { iterations: opts.max_iter, gap })
}
