//! Fitted regressors that can be saved and applied to new covariates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkelError};
use crate::metric::{knot_paths, pairwise_distances, project_all};
use crate::par::Execution;
use crate::penalty::{graph_operators, penalized_spline_fit, Penalty};
use crate::regress::{
    kernel_predict, knn_predict, spline_predict, spline_transform, Bandwidth, ComponentMeans, KernelFamily,
};
use crate::types::{PointCloud, Skeleton, SkeletonPosition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Skernel,
    Sknn,
    Slspline,
}

impl std::str::FromStr for MethodKind {
    type Err = SkelError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skernel" => Ok(MethodKind::Skernel),
            "sknn" => Ok(MethodKind::Sknn),
            "slspline" => Ok(MethodKind::Slspline),
            other => Err(SkelError::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Options for [`fit_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub family: KernelFamily,
    pub bandwidth: Bandwidth,
    pub k: usize,
    pub locality: bool,
    /// Predict the training component mean where a regressor has no support.
    pub fallback: bool,
    pub penalty: Penalty,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            family: KernelFamily::Gaussian,
            bandwidth: Bandwidth::Rhns(4.0),
            k: 10,
            locality: false,
            fallback: false,
            penalty: Penalty::None,
        }
    }
}

impl FitOptions {
    /// Apply `key=value` pairs separated by commas, e.g. `bandwidth=4rhns,kernel=gaussian`.
    pub fn apply_params(&mut self, s: &str) -> Result<()> {
        let bad = |k: &str, v: &str| SkelError::Config(format!("bad value '{v}' for '{k}'"));
        let kv: BTreeMap<&str, &str> = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.split_once('=').map(|(k, v)| (k.trim(), v.trim())))
            .collect::<Option<_>>()
            .ok_or_else(|| SkelError::Config(format!("params must be key=value pairs: '{s}'")))?;
        for (k, v) in kv {
            match k {
                "bandwidth" | "h" => self.bandwidth = v.parse()?,
                "kernel" => self.family = v.parse()?,
                "k" => self.k = v.parse().map_err(|_| bad(k, v))?,
                "locality" => self.locality = v.parse().map_err(|_| bad(k, v))?,
                "fallback" => self.fallback = v.parse().map_err(|_| bad(k, v))?,
                other => return Err(SkelError::Config(format!("unknown parameter '{other}'"))),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Estimator {
    Skernel {
        family: KernelFamily,
        bandwidth: f64,
        positions: Vec<SkeletonPosition>,
        responses: Vec<f64>,
        locality: bool,
    },
    Sknn {
        k: usize,
        positions: Vec<SkeletonPosition>,
        responses: Vec<f64>,
        locality: bool,
    },
    Slspline {
        penalty: Penalty,
        beta: Vec<f64>,
        unsupported: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub skeleton: Skeleton,
    pub estimator: Estimator,
    pub fallback: bool,
    /// Component means of the training responses, used by `fallback`.
    component_means: Vec<f64>,
}

pub fn fit_model(sk: &Skeleton, train: &PointCloud, method: MethodKind, opts: &FitOptions, exec: Execution) -> Result<FittedModel> {
    let y = train
        .responses()
        .ok_or_else(|| SkelError::Shape("training data needs a 'y' column".into()))?
        .to_vec();
    let positions = project_all(train, sk, exec)?;
    let estimator = match method {
        MethodKind::Skernel => Estimator::Skernel {
            family: opts.family,
            bandwidth: opts.bandwidth.resolve(sk)?,
            positions: positions.clone(),
            responses: y.clone(),
            locality: opts.locality,
        },
        MethodKind::Sknn => {
            if opts.k == 0 {
                return Err(SkelError::Config("k must be at least 1".into()));
            }
            Estimator::Sknn { k: opts.k, positions: positions.clone(), responses: y.clone(), locality: opts.locality }
        }
        MethodKind::Slspline => {
            let z = spline_transform(&positions, sk);
            let ops = match opts.penalty {
                Penalty::None => None,
                Penalty::LapSmooth { order, .. } | Penalty::TrendFilter { order, .. } => Some(graph_operators(sk, order)),
            };
            let fit = penalized_spline_fit(&z, &y, ops.as_ref(), opts.penalty)?;
            Estimator::Slspline { penalty: opts.penalty, beta: fit.beta, unsupported: fit.unsupported }
        }
    };
    let means = ComponentMeans::new(sk, &positions, &y)?;
    let n_comp = sk.component().iter().max().map_or(0, |m| m + 1);
    let component_means = (0..n_comp)
        .map(|c| {
            let j = sk.component().iter().position(|&l| l == c).expect("labels are contiguous");
            means.for_position(sk, &SkeletonPosition::knot(j))
        })
        .collect();
    Ok(FittedModel { skeleton: sk.clone(), estimator, fallback: opts.fallback, component_means })
}

impl FittedModel {
    fn fallback_for(&self, q: &SkeletonPosition) -> f64 {
        self.component_means.get(self.skeleton.component_of(q)).copied().unwrap_or(f64::NAN)
    }

    fn resolve(&self, q: &SkeletonPosition, r: Result<f64>) -> Result<f64> {
        match r {
            Err(SkelError::NoSupport(_)) if self.fallback => Ok(self.fallback_for(q)),
            other => other,
        }
    }

    /// Predictions at already-projected positions.
    pub fn predict_positions(&self, query: &[SkeletonPosition], exec: Execution) -> Result<Vec<f64>> {
        let sk = &self.skeleton;
        match &self.estimator {
            Estimator::Skernel { family, bandwidth, positions, responses, locality } => {
                let table = knot_paths(sk);
                let d = pairwise_distances(positions, query, sk, &table, *locality, exec);
                d.iter().zip(query).map(|(row, q)| self.resolve(q, kernel_predict(responses, row, *family, *bandwidth))).collect()
            }
            Estimator::Sknn { k, positions, responses, locality } => {
                let table = knot_paths(sk);
                let d = pairwise_distances(positions, query, sk, &table, *locality, exec);
                d.iter()
                    .zip(query)
                    .map(|(row, q)| self.resolve(q, knn_predict(responses, row, *k).map(|p| p.value)))
                    .collect()
            }
            Estimator::Slspline { beta, unsupported, .. } => query
                .iter()
                .map(|q| {
                    let (a, b) = sk.position_knots(q);
                    let supported = |c: usize| unsupported.binary_search(&c).is_err();
                    if supported(a) || b.is_some_and(supported) {
                        Ok(spline_predict(q, beta, sk))
                    } else {
                        self.resolve(q, Err(SkelError::NoSupport(q.to_string())))
                    }
                })
                .collect(),
        }
    }

    pub fn predict(&self, points: &PointCloud, exec: Execution) -> Result<Vec<f64>> {
        let pos = project_all(points, &self.skeleton, exec)?;
        self.predict_positions(&pos, exec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
