//! Agglomerative segmentation of the knot graph on Voronoi-density dissimilarities.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkelError};
use crate::types::EdgeRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Single,
    Average,
}

impl std::str::FromStr for Linkage {
    type Err = SkelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "average" => Ok(Linkage::Average),
            other => Err(SkelError::Config(format!("unknown linkage '{other}'"))),
        }
    }
}

/// Knot dissimilarities `s_max - s_ij`; pairs without an edge have weight 0
/// and therefore dissimilarity `s_max`.
pub fn dissimilarities(edges: &[EdgeRecord], k: usize) -> Vec<Vec<f64>> {
    let s_max = edges.iter().map(|e| e.vd_weight).fold(0.0, f64::max);
    let mut d = vec![vec![s_max; k]; k];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in edges {
        let v = s_max - e.vd_weight;
        d[e.i][e.j] = v;
        d[e.j][e.i] = v;
    }
    d
}

/// Cluster knots into `n_components` groups and drop edges that cross groups.
///
/// Labels are numbered in order of each group's lowest knot index.
pub fn segment_skeleton(
    edges: &[EdgeRecord],
    k: usize,
    n_components: usize,
    linkage: Linkage,
) -> Result<(Vec<usize>, Vec<EdgeRecord>)> {
    if n_components == 0 || n_components > k {
        return Err(SkelError::Config(format!(
            "n_components = {n_components} must lie in 1..={k}"
        )));
    }
    let mut d = dissimilarities(edges, k);
    let mut owner: Vec<usize> = (0..k).collect();
    let mut size = vec![1usize; k];
    let mut active: Vec<usize> = (0..k).collect();

    while active.len() > n_components {
        let mut best = (f64::INFINITY, 0, 0);
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                if d[a][b] < best.0 {
                    best = (d[a][b], a, b);
                }
            }
        }
        let (_, a, b) = best;
        for &o in &active {
            if o == a || o == b {
                continue;
            }
            let v = match linkage {
                Linkage::Single => d[a][o].min(d[b][o]),
                Linkage::Average => {
                    (size[a] as f64 * d[a][o] + size[b] as f64 * d[b][o]) / (size[a] + size[b]) as f64
                }
            };
            d[a][o] = v;
            d[o][a] = v;
        }
        size[a] += size[b];
        for w in owner.iter_mut() {
            if *w == b {
                *w = a;
            }
        }
        active.retain(|&c| c != b);
    }

    let mut labels = vec![usize::MAX; k];
    let mut next = 0;
    for v in 0..k {
        if labels[v] == usize::MAX {
            for u in v..k {
                if owner[u] == owner[v] {
                    labels[u] = next;
                }
            }
            next += 1;
        }
    }
    let kept = edges.iter().filter(|e| labels[e.i] == labels[e.j]).cloned().collect();
    Ok((labels, kept))
}
