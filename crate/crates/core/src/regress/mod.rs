//! Regressors on the skeleton: kernel smoothing, nearest neighbours and the
//! linear spline.

mod kernel;
mod knn;
mod spline;

pub use kernel::{kernel_predict, r_hns, Bandwidth, KernelFamily, KernelSpec};
pub use knn::{knn_predict, KnnPrediction};
pub use spline::{spline_fit, spline_predict, spline_transform, SplineFit};

use crate::error::{Result, SkelError};
use crate::types::{Skeleton, SkeletonPosition};

/// Mean training response per component, for the opt-in no-support fallback.
#[derive(Debug, Clone)]
pub struct ComponentMeans {
    means: Vec<Option<f64>>,
    global: f64,
}

impl ComponentMeans {
    pub fn new(sk: &Skeleton, positions: &[SkeletonPosition], responses: &[f64]) -> Result<Self> {
        if responses.is_empty() {
            return Err(SkelError::Degenerate("no training responses".into()));
        }
        let n_comp = sk.component().iter().max().map_or(0, |m| m + 1);
        let mut sums = vec![(0.0, 0usize); n_comp];
        for (p, y) in positions.iter().zip(responses) {
            let c = sk.component_of(p);
            sums[c].0 += y;
            sums[c].1 += 1;
        }
        let means = sums.iter().map(|&(s, c)| (c > 0).then(|| s / c as f64)).collect();
        let global = responses.iter().sum::<f64>() / responses.len() as f64;
        Ok(Self { means, global })
    }

    /// The query's component mean, or the global mean for an empty component.
    pub fn for_position(&self, sk: &Skeleton, p: &SkeletonPosition) -> f64 {
        self.means
            .get(sk.component_of(p))
            .copied()
            .flatten()
            .unwrap_or(self.global)
    }
}
