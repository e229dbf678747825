//! Projection onto the skeleton and the skeleton path metric.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::builder::two_nearest;
use crate::error::{Result, SkelError};
use crate::par::{self, Execution};
use crate::types::{canonicalize_position, Skeleton, SkeletonPosition};

/// Project an ambient point: onto the edge joining its two nearest knots when
/// that edge exists (clipped to the segment), otherwise onto the nearest knot.
pub fn project(x: &[f64], sk: &Skeleton) -> Result<SkeletonPosition> {
    if x.len() != sk.dim() {
        return Err(SkelError::Shape(format!(
            "point in R^{} but skeleton in R^{}",
            x.len(),
            sk.dim()
        )));
    }
    if sk.n_knots() == 1 {
        return Ok(SkeletonPosition::knot(0));
    }
    let (i1, i2) = two_nearest(x, sk.knots());
    let Some(edge) = sk.find_edge(i1, i2) else {
        return Ok(SkeletonPosition::knot(i1));
    };
    let (v1, v2) = (sk.knot(i1), sk.knot(i2));
    let mut num = 0.0;
    let mut den = 0.0;
    for ((xa, a), b) in x.iter().zip(v1).zip(v2) {
        num += (xa - a) * (b - a);
        den += (b - a) * (b - a);
    }
    let t = (num / den).clamp(0.0, 1.0);
    let t_low = if i1 < i2 { t } else { 1.0 - t };
    canonicalize_position(sk, edge, t_low)
}

pub fn project_all(
    points: &crate::types::PointCloud,
    sk: &Skeleton,
    exec: Execution,
) -> Result<Vec<SkeletonPosition>> {
    par::try_map_range(exec, points.n(), |m| project(points.point(m), sk))
}

/// All-pairs shortest path lengths between knots along skeleton edges.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotPathTable {
    k: usize,
    dist: Vec<f64>,
}

impl KnotPathTable {
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.k + b]
    }

    pub fn n_knots(&self) -> usize {
        self.k
    }
}

#[derive(PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Frontier(0.0, src));
    while let Some(Frontier(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Frontier(nd, v));
            }
        }
    }
    dist
}

/// Repeated single-source Dijkstra; the table is symmetrised exactly.
pub fn knot_paths(sk: &Skeleton) -> KnotPathTable {
    let k = sk.n_knots();
    let mut adj = vec![Vec::new(); k];
    for e in sk.edges() {
        adj[e.i].push((e.j, e.length));
        adj[e.j].push((e.i, e.length));
    }
    let rows = par::map_range(Execution::Parallel, k, |s| dijkstra(&adj, s));
    let mut dist = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let v = rows[a][b].min(rows[b][a]);
            dist[a * k + b] = v;
            dist[b * k + a] = v;
        }
    }
    KnotPathTable { k, dist }
}

/// Knots reachable directly from a position, with the offset along the edge.
#[inline]
fn anchors(p: &SkeletonPosition, sk: &Skeleton) -> ([(usize, f64); 2], usize) {
    match *p {
        SkeletonPosition::Knot { index } => ([(index, 0.0), (index, 0.0)], 1),
        SkeletonPosition::EdgePoint { edge, t } => {
            let e = sk.edge(edge);
            ([(e.i, t * e.length), (e.j, (1.0 - t) * e.length)], 2)
        }
    }
}

/// Skeleton distance between two positions; `+inf` across components.
pub fn skeleton_distance(
    p: &SkeletonPosition,
    q: &SkeletonPosition,
    sk: &Skeleton,
    table: &KnotPathTable,
) -> f64 {
    if p == q {
        return 0.0;
    }
    if sk.component_of(p) != sk.component_of(q) {
        return f64::INFINITY;
    }
    if let (
        SkeletonPosition::EdgePoint { edge: ep, t: tp },
        SkeletonPosition::EdgePoint { edge: eq, t: tq },
    ) = (p, q)
    {
        if ep == eq {
            return (tp - tq).abs() * sk.edge(*ep).length;
        }
    }
    let (pa, np) = anchors(p, sk);
    let (qa, nq) = anchors(q, sk);
    let mut best = f64::INFINITY;
    for &(a, oa) in &pa[..np] {
        for &(b, ob) in &qa[..nq] {
            // (oa + ob) is commutative, so d(p,q) and d(q,p) agree bit for bit
            let v = (oa + ob) + table.get(a, b);
            if v < best {
                best = v;
            }
        }
    }
    best
}

/// Whether the knot sets of two positions intersect.
pub fn share_knot(p: &SkeletonPosition, q: &SkeletonPosition, sk: &Skeleton) -> bool {
    let (a1, a2) = sk.position_knots(p);
    let (b1, b2) = sk.position_knots(q);
    let pa = [Some(a1), a2];
    let qb = [Some(b1), b2];
    pa.iter().flatten().any(|a| qb.iter().flatten().any(|b| a == b))
}

/// Row-major `query.len() x train.len()` distance matrix. With `locality`,
/// only pairs sharing a knot are evaluated; the rest are `+inf`.
pub fn pairwise_distances(
    train: &[SkeletonPosition],
    query: &[SkeletonPosition],
    sk: &Skeleton,
    table: &KnotPathTable,
    locality: bool,
    exec: Execution,
) -> Vec<Vec<f64>> {
    par::map_slice(exec, query, |q| {
        train
            .iter()
            .map(|p| {
                if p == q {
                    0.0
                } else if locality && !share_knot(p, q, sk) {
                    f64::INFINITY
                } else {
                    skeleton_distance(q, p, sk, table)
                }
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ambient_location, dist, RowMatrix};

    fn sk(rows: &[Vec<f64>], pairs: &[(usize, usize)]) -> Skeleton {
        Skeleton::from_graph(RowMatrix::from_rows(rows).unwrap(), pairs).unwrap()
    }

    #[test]
    fn projection_cases() {
        let mut rows = vec![vec![0.0, 0.0], vec![2.0, 0.0]];
        rows.push(vec![50.0, 50.0]);
        rows.push(vec![7.0, 7.0]);
        let s = sk(&rows, &[(0, 1)]);
        assert_eq!(project(&[7.0, 7.0], &s).unwrap(), SkeletonPosition::knot(3));
        assert_eq!(
            project(&[1.0, 1.0], &s).unwrap(),
            SkeletonPosition::EdgePoint { edge: 0, t: 0.5 }
        );
        assert_eq!(project(&[3.0, 1.0], &s).unwrap(), SkeletonPosition::knot(1));
        assert!(matches!(project(&[1.0], &s), Err(SkelError::Shape(_))));
    }

    #[test]
    fn projection_orientation_from_lower_index() {
        let s = sk(&[vec![0.0], vec![10.0]], &[(0, 1)]);
        // nearest knot is 1, so the raw parameter runs from knot 1
        assert_eq!(project(&[8.0], &s).unwrap(), SkeletonPosition::EdgePoint { edge: 0, t: 0.8 });
    }

    #[test]
    fn no_edge_snaps_to_nearest() {
        let s = sk(&[vec![0.0], vec![2.0], vec![10.0]], &[(1, 2)]);
        assert_eq!(project(&[0.9], &s).unwrap(), SkeletonPosition::knot(0));
    }

    #[test]
    fn path_table_cases() {
        let chain = sk(&[vec![0.0], vec![1.0], vec![3.0]], &[(0, 1), (1, 2)]);
        assert_eq!(knot_paths(&chain).get(0, 2), 3.0);

        let split = sk(&[vec![0.0], vec![1.0], vec![5.0], vec![6.0]], &[(0, 1), (2, 3)]);
        assert_eq!(knot_paths(&split).get(0, 3), f64::INFINITY);
    }

    #[test]
    fn triangle_matches_floyd_warshall() {
        // lengths 1, 1 and (nearly) 2 via a flattened triangle, plus a long edge
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![4.0, 4.0]];
        let s = sk(&rows, &[(0, 1), (1, 2), (0, 2), (2, 3), (0, 3)]);
        let k = 4;
        let mut fw = vec![vec![f64::INFINITY; k]; k];
        for v in 0..k {
            fw[v][v] = 0.0;
        }
        for e in s.edges() {
            fw[e.i][e.j] = e.length;
            fw[e.j][e.i] = e.length;
        }
        for m in 0..k {
            for a in 0..k {
                for b in 0..k {
                    fw[a][b] = fw[a][b].min(fw[a][m] + fw[m][b]);
                }
            }
        }
        let t = knot_paths(&s);
        for a in 0..k {
            for b in 0..k {
                assert!((t.get(a, b) - fw[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn long_side_uses_two_hops() {
        // stored weights (0,1)=1, (1,2)=1, (0,2)=3; the table only reads lengths
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let mut s = sk(&rows, &[(0, 1), (1, 2)]);
        let mut edges = s.edges().to_vec();
        edges.push(crate::types::EdgeRecord { i: 0, j: 2, length: 3.0, vd_weight: 0.0, count: 0 });
        s = Skeleton::from_parts(s.knots().clone(), edges, vec![0, 0, 0], serde_json::Value::Null);
        assert_eq!(knot_paths(&s).get(0, 2), 2.0);
    }

    #[test]
    fn same_edge_distance() {
        let s = sk(&[vec![0.0, 0.0], vec![3.0, 4.0]], &[(0, 1)]);
        let t = knot_paths(&s);
        let p = SkeletonPosition::EdgePoint { edge: 0, t: 0.2 };
        let q = SkeletonPosition::EdgePoint { edge: 0, t: 0.7 };
        assert!((skeleton_distance(&p, &q, &s, &t) - 2.5).abs() < 1e-12);
        let euclid = dist(&ambient_location(&p, &s), &ambient_location(&q, &s));
        assert!((skeleton_distance(&p, &q, &s, &t) - euclid).abs() < 1e-12);
        assert_eq!(skeleton_distance(&p, &p, &s, &t), 0.0);
    }

    #[test]
    fn locality_masks_disjoint_edges() {
        let s = sk(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            &[(0, 1), (1, 2), (2, 3)],
        );
        let t = knot_paths(&s);
        let a = SkeletonPosition::EdgePoint { edge: 0, t: 0.5 };
        let b = SkeletonPosition::EdgePoint { edge: 2, t: 0.5 };
        let c = SkeletonPosition::EdgePoint { edge: 0, t: 0.9 };
        let local = pairwise_distances(&[a, c], &[b, c], &s, &t, true, Execution::Sequential);
        let full = pairwise_distances(&[a, c], &[b, c], &s, &t, false, Execution::Sequential);
        assert_eq!(local[0][0], f64::INFINITY);
        assert!((full[0][0] - 2.0).abs() < 1e-12);
        assert_eq!(local[1], full[1]);
    }
}
