//! Graph penalties for the skeleton spline: incidence and Laplacian
//! operators, generalized ridge and generalized lasso fits.

mod admm;
mod dual_path;
mod operators;

pub use admm::{gen_lasso_fixed_lambda, lasso_objective, LassoOptions};
pub use dual_path::{gen_lasso_dual_path, DualPath, PathKnot};
pub use operators::{graph_operators, GraphOperators};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SkelError};
use crate::linalg::sym_pinv;
use crate::regress::{spline_fit, SplineFit};

/// Penalty applied to the knot values of the spline.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Penalty {
    #[default]
    None,
    /// Squared-norm penalty `lambda * ||Delta beta||^2`.
    LapSmooth { order: usize, lambda: f64 },
    /// Absolute penalty `lambda * ||Delta beta||_1`.
    TrendFilter { order: usize, lambda: f64 },
}

impl Penalty {
    pub fn parse(kind: &str, order: usize, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(SkelError::Config(format!("lambda must be nonnegative, got {lambda}")));
        }
        match kind {
            "none" => Ok(Penalty::None),
            "lapsmooth" => Ok(Penalty::LapSmooth { order, lambda }),
            "trendfilter" => Ok(Penalty::TrendFilter { order, lambda }),
            other => Err(SkelError::Config(format!("unknown penalty '{other}'"))),
        }
    }
}

/// Minimum-norm solution of `(Z'Z + lambda D'D) beta = Z'y`.
pub fn gen_ridge_fit(z: &DMatrix<f64>, y: &[f64], delta: &DMatrix<f64>, lambda: f64) -> Result<SplineFit> {
    if !(lambda >= 0.0) {
        return Err(SkelError::Config(format!("lambda must be nonnegative, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(spline_fit(z, y));
    }
    if delta.ncols() != z.ncols() {
        return Err(SkelError::Shape("penalty and design disagree on knot count".into()));
    }
    let yv = DVector::from_column_slice(y);
    let system = z.transpose() * z + delta.transpose() * delta * lambda;
    let (inv, rank) = sym_pinv(&system);
    if rank < system.nrows() {
        log::warn!("penalized system is singular (rank {rank} of {})", system.nrows());
    }
    let beta = inv * (z.transpose() * yv);
    let unsupported = (0..z.ncols()).filter(|&c| z.column(c).iter().all(|&v| v == 0.0)).collect();
    Ok(SplineFit { beta: beta.iter().copied().collect(), rank, unsupported })
}

/// Spline fit under any [`Penalty`].
pub fn penalized_spline_fit(
    z: &DMatrix<f64>,
    y: &[f64],
    ops: Option<&GraphOperators>,
    penalty: Penalty,
) -> Result<SplineFit> {
    let need_ops = || ops.ok_or_else(|| SkelError::Config("penalty needs graph operators".into()));
    match penalty {
        Penalty::None => Ok(spline_fit(z, y)),
        Penalty::LapSmooth { lambda, .. } => gen_ridge_fit(z, y, &need_ops()?.delta, lambda),
        Penalty::TrendFilter { lambda, .. } => {
            let beta = gen_lasso_fixed_lambda(z, y, &need_ops()?.delta, lambda, &LassoOptions::default())?;
            let unsupported = (0..z.ncols()).filter(|&c| z.column(c).iter().all(|&v| v == 0.0)).collect();
            Ok(SplineFit { beta: beta.iter().copied().collect(), rank: crate::linalg::matrix_rank(z), unsupported })
        }
    }
}
