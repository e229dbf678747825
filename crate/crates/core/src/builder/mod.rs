//! Skeleton construction: k-means knots, 2-NN edges with Voronoi-density
//! weights, optional pruning and segmentation.

mod edges;
mod kmeans;
mod segment;

pub use edges::{assign_two_nn, build_edges, prune_knots, two_nearest, TwoNNAssignment};
pub use kmeans::{build_knots, KMeansFit, KMeansParams};
pub use segment::{dissimilarities, segment_skeleton, Linkage};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkelError};
use crate::par::Execution;
use crate::types::{PointCloud, Skeleton};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildConfig {
    /// `None` means `round(sqrt(n))`.
    pub n_knots: Option<usize>,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub min_cell: usize,
    pub min_edge_count: usize,
    pub n_components: usize,
    pub linkage: Linkage,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            n_knots: None,
            restarts: 100,
            max_iter: 100,
            tol: 1e-8,
            min_cell: 0,
            min_edge_count: 1,
            n_components: 1,
            linkage: Linkage::Single,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl BuildConfig {
    pub fn resolved_knots(&self, n: usize) -> usize {
        self.n_knots.unwrap_or_else(|| ((n as f64).sqrt().round() as usize).max(1))
    }

    pub fn kmeans_params(&self, n: usize) -> KMeansParams {
        KMeansParams {
            k: self.resolved_knots(n),
            restarts: self.restarts,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            execution: self.execution,
        }
    }
}

/// Full construction pipeline. Deterministic for a fixed seed.
pub fn build_skeleton(points: &PointCloud, cfg: &BuildConfig) -> Result<Skeleton> {
    let n = points.n();
    let fit = build_knots(points, &cfg.kmeans_params(n))?;
    let (knots, _assignment) = prune_knots(points, &fit.knots, &fit.assignment, cfg.min_cell)?;
    let k = knots.nrows();
    if cfg.n_components > k {
        return Err(SkelError::Config(format!(
            "n_components = {} exceeds the {k} knots",
            cfg.n_components
        )));
    }
    let edges = if k >= 2 {
        let nn = assign_two_nn(points, &knots, cfg.execution)?;
        build_edges(&nn, &knots, n, cfg.min_edge_count)?
    } else {
        Vec::new()
    };
    let (component, edges) = segment_skeleton(&edges, k, cfg.n_components, cfg.linkage)?;
    let meta = serde_json::json!({
        "n": n,
        "objective": fit.objective,
        "config": cfg,
    });
    Skeleton::new(knots, edges, component, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::RowMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nd = Normal::new(0.0, 0.3).unwrap();
        let mut rows = Vec::new();
        for c in [-10.0, 10.0] {
            for _ in 0..60 {
                rows.push(vec![c + nd.sample(&mut rng), nd.sample(&mut rng)]);
            }
        }
        PointCloud::new(RowMatrix::from_rows(&rows).unwrap(), None).unwrap()
    }

    #[test]
    fn separated_blobs_cut_into_two() {
        let pc = blobs(1);
        let mut cfg = BuildConfig { n_knots: Some(2), restarts: 5, seed: 3, ..Default::default() };
        let joined = build_skeleton(&pc, &cfg).unwrap();
        assert_eq!(joined.edges().len(), 1);
        cfg.n_components = 2;
        let cut = build_skeleton(&pc, &cfg).unwrap();
        assert_eq!(cut.n_knots(), 2);
        assert!(cut.edges().is_empty());
        assert_ne!(cut.component()[0], cut.component()[1]);
    }

    #[test]
    fn line_segment_gives_path() {
        let rows: Vec<Vec<f64>> = (0..90).map(|i| vec![i as f64 / 89.0 * 3.0, 0.0]).collect();
        let pc = PointCloud::new(RowMatrix::from_rows(&rows).unwrap(), None).unwrap();
        let cfg = BuildConfig { n_knots: Some(3), restarts: 10, seed: 1, ..Default::default() };
        let sk = build_skeleton(&pc, &cfg).unwrap();
        // order knots along the line and check the edges join neighbours only
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| sk.knot(a)[0].total_cmp(&sk.knot(b)[0]));
        let mut pairs: Vec<(usize, usize)> = sk.edges().iter().map(|e| (e.i, e.j)).collect();
        pairs.sort();
        let mut want = vec![
            (order[0].min(order[1]), order[0].max(order[1])),
            (order[1].min(order[2]), order[1].max(order[2])),
        ];
        want.sort();
        assert_eq!(pairs, want);
    }

    #[test]
    fn deterministic_serialization() {
        let pc = blobs(7);
        let cfg = BuildConfig { n_knots: Some(8), restarts: 4, seed: 99, ..Default::default() };
        let a = build_skeleton(&pc, &cfg).unwrap().to_json().unwrap();
        let b = build_skeleton(&pc, &BuildConfig { execution: Execution::Sequential, ..cfg }).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_knot_rule() {
        assert_eq!(BuildConfig::default().resolved_knots(3200), 57);
        assert_eq!(BuildConfig::default().resolved_knots(1600), 40);
    }
}
