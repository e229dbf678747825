//! Two-nearest-knot assignment, Voronoi-density edges and knot pruning.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kmeans::nearest;
use crate::error::{Result, SkelError};
use crate::par::{self, Execution};
use crate::types::{dist, sq_dist, EdgeRecord, PointCloud, RowMatrix};

/// Nearest and second-nearest knot of every point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoNNAssignment {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

/// Exact two nearest knots of `x`; ties go to the lower index.
#[inline]
pub fn two_nearest(x: &[f64], knots: &RowMatrix) -> (usize, usize) {
    let (mut b1, mut d1) = (usize::MAX, f64::INFINITY);
    let (mut b2, mut d2) = (usize::MAX, f64::INFINITY);
    for c in 0..knots.nrows() {
        let d = sq_dist(x, knots.row(c));
        if d < d1 {
            (b2, d2) = (b1, d1);
            (b1, d1) = (c, d);
        } else if d < d2 {
            (b2, d2) = (c, d);
        }
    }
    (b1, b2)
}

pub fn assign_two_nn(points: &PointCloud, knots: &RowMatrix, exec: Execution) -> Result<TwoNNAssignment> {
    if knots.nrows() < 2 {
        return Err(SkelError::Config(format!(
            "two-nearest-knot assignment needs at least 2 knots, got {}",
            knots.nrows()
        )));
    }
    if knots.ncols() != points.dim() {
        return Err(SkelError::Shape(format!(
            "knots in R^{} but points in R^{}",
            knots.ncols(),
            points.dim()
        )));
    }
    let pairs = par::map_range(exec, points.n(), |m| two_nearest(points.point(m), knots));
    let (first, second) = pairs.into_iter().unzip();
    Ok(TwoNNAssignment { first, second })
}

/// One edge per knot pair whose 2-NN region holds at least `min_count` points.
pub fn build_edges(
    two_nn: &TwoNNAssignment,
    knots: &RowMatrix,
    n: usize,
    min_count: usize,
) -> Result<Vec<EdgeRecord>> {
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&a, &b) in two_nn.first.iter().zip(&two_nn.second) {
        *counts.entry((a.min(b), a.max(b))).or_default() += 1;
    }
    let min_count = min_count.max(1);
    let mut edges = Vec::with_capacity(counts.len());
    for ((i, j), count) in counts {
        if count < min_count {
            continue;
        }
        let length = dist(knots.row(i), knots.row(j));
        if !(length > 0.0) {
            return Err(SkelError::Degenerate(format!("knots {i} and {j} coincide")));
        }
        edges.push(EdgeRecord {
            i,
            j,
            length,
            vd_weight: (count as f64 / n as f64) / length,
            count,
        });
    }
    Ok(edges)
}

/// Drop knots whose cell holds fewer than `min_cell` points and reassign
/// their points to the nearest surviving knot.
pub fn prune_knots(
    points: &PointCloud,
    knots: &RowMatrix,
    assignment: &[usize],
    min_cell: usize,
) -> Result<(RowMatrix, Vec<usize>)> {
    if min_cell == 0 {
        return Ok((knots.clone(), assignment.to_vec()));
    }
    let mut counts = vec![0usize; knots.nrows()];
    for &a in assignment {
        counts[a] += 1;
    }
    let keep: Vec<usize> = (0..knots.nrows()).filter(|&c| counts[c] >= min_cell).collect();
    if keep.is_empty() {
        return Err(SkelError::Degenerate(format!(
            "every knot has fewer than {min_cell} points"
        )));
    }
    let mut remap = vec![usize::MAX; knots.nrows()];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = new;
    }
    let kept = knots.select_rows(&keep);
    let reassigned = assignment
        .iter()
        .enumerate()
        .map(|(m, &a)| {
            if remap[a] != usize::MAX {
                remap[a]
            } else {
                nearest(points.point(m), &kept).0
            }
        })
        .collect();
    Ok((kept, reassigned))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: &[Vec<f64>]) -> RowMatrix {
        RowMatrix::from_rows(rows).unwrap()
    }

    fn cloud(rows: &[Vec<f64>]) -> PointCloud {
        PointCloud::new(mat(rows), None).unwrap()
    }

    #[test]
    fn point_on_knot_and_tie_rule() {
        let knots = mat(&(0..8).map(|i| vec![10.0 * i as f64, 50.0]).collect::<Vec<_>>());
        let mut k = knots.clone();
        k.row_mut(3).copy_from_slice(&[0.0, 1.0]);
        k.row_mut(7).copy_from_slice(&[0.0, -1.0]);
        assert_eq!(two_nearest(&[0.0, 1.0], &k).0, 3);
        assert_eq!(two_nearest(&[0.0, 0.0], &k), (3, 7));
    }

    #[test]
    fn matches_exhaustive_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let knots: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let a = assign_two_nn(&cloud(&pts), &mat(&knots), Execution::Parallel).unwrap();
        for (m, p) in pts.iter().enumerate() {
            let mut order: Vec<(f64, usize)> =
                knots.iter().enumerate().map(|(c, k)| (sq_dist(p, k), c)).collect();
            order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            assert_eq!((a.first[m], a.second[m]), (order[0].1, order[1].1));
        }
    }

    #[test]
    fn single_knot_rejected() {
        let r = assign_two_nn(&cloud(&[vec![0.0]]), &mat(&[vec![0.0]]), Execution::Sequential);
        assert!(matches!(r, Err(SkelError::Config(_))));
    }

    #[test]
    fn collinear_knots_single_edge() {
        let knots = mat(&[vec![0.0], vec![1.0], vec![2.0]]);
        let pts: Vec<Vec<f64>> = (1..10).map(|i| vec![i as f64 / 10.0]).collect();
        let nn = assign_two_nn(&cloud(&pts), &knots, Execution::Sequential).unwrap();
        let edges = build_edges(&nn, &knots, pts.len(), 1).unwrap();
        assert_eq!(edges.len(), 1);
        assert_eq!((edges[0].i, edges[0].j, edges[0].count), (0, 1, 9));
        assert!((edges[0].vd_weight - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_nn_region_between_knots_yields_edge() {
        // three knots; points sit in the region whose two nearest knots are 1 and 2
        let knots = mat(&[vec![0.0, 5.0], vec![-1.0, 0.0], vec![1.0, 0.0]]);
        let pts = vec![vec![0.0, -0.5], vec![0.2, -0.3], vec![-0.1, -0.8]];
        let nn = assign_two_nn(&cloud(&pts), &knots, Execution::Sequential).unwrap();
        let edges = build_edges(&nn, &knots, 3, 1).unwrap();
        assert_eq!(edges.iter().map(|e| (e.i, e.j)).collect::<Vec<_>>(), vec![(1, 2)]);
    }

    #[test]
    fn coincident_knots_on_counted_pair() {
        let knots = mat(&[vec![0.0], vec![0.0], vec![5.0]]);
        let nn = TwoNNAssignment { first: vec![0], second: vec![1] };
        assert!(matches!(build_edges(&nn, &knots, 1, 1), Err(SkelError::Degenerate(_))));
    }

    #[test]
    fn prune_cases() {
        let knots = mat(&[vec![0.0], vec![10.0], vec![20.0]]);
        let mut pts = vec![];
        let mut assign = vec![];
        for c in 0..2 {
            for _ in 0..10 {
                pts.push(vec![10.0 * c as f64]);
                assign.push(c);
            }
        }
        pts.push(vec![19.0]);
        assign.push(2);
        let pc = cloud(&pts);
        let (k0, a0) = prune_knots(&pc, &knots, &assign, 0).unwrap();
        assert_eq!((k0, a0), (knots.clone(), assign.clone()));
        let (k1, a1) = prune_knots(&pc, &knots, &assign, 2).unwrap();
        assert_eq!(k1.nrows(), 2);
        assert_eq!(a1[20], 1);

        let singles = cloud(&[vec![0.0], vec![10.0], vec![20.0]]);
        let r = prune_knots(&singles, &knots, &[0, 1, 2], 2);
        assert!(matches!(r, Err(SkelError::Degenerate(_))));
    }
}
