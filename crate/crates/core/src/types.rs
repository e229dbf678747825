//! Shared domain types: point clouds, skeletons and positions on a skeleton.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkelError};

/// Dense row-major matrix; rows are points.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RowMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(SkelError::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(SkelError::Shape("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// New matrix holding the selected rows in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Ambient covariates with optional responses.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: RowMatrix,
    responses: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: RowMatrix, responses: Option<Vec<f64>>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(SkelError::Shape("point cloud needs n >= 1 and d >= 1".into()));
        }
        if points.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(SkelError::Shape("non-finite coordinate".into()));
        }
        if let Some(y) = &responses {
            if y.len() != points.nrows() {
                return Err(SkelError::Shape(format!(
                    "{} responses for {} points",
                    y.len(),
                    points.nrows()
                )));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(SkelError::Shape("non-finite response".into()));
            }
        }
        Ok(Self { points, responses })
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &RowMatrix {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn responses(&self) -> Option<&[f64]> {
        self.responses.as_deref()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            points: self.points.select_rows(idx),
            responses: self.responses.as_ref().map(|y| idx.iter().map(|&i| y[i]).collect()),
        }
    }
}

/// An edge between knots `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub length: f64,
    pub vd_weight: f64,
    pub count: usize,
}

/// A location on the skeleton. `t` is measured from the lower-indexed
/// endpoint and lies strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkeletonPosition {
    Knot { index: usize },
    EdgePoint { edge: usize, t: f64 },
}

impl SkeletonPosition {
    pub fn knot(index: usize) -> Self {
        SkeletonPosition::Knot { index }
    }
}

impl fmt::Display for SkeletonPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkeletonPosition::Knot { index } => write!(f, "knot {index}"),
            SkeletonPosition::EdgePoint { edge, t } => write!(f, "edge {edge} @ t={t}"),
        }
    }
}

/// The learned knot-edge graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SkeletonJson", into = "SkeletonJson")]
pub struct Skeleton {
    knots: RowMatrix,
    edges: Vec<EdgeRecord>,
    component: Vec<usize>,
    meta: serde_json::Value,
    edge_lookup: HashMap<(usize, usize), usize>,
}

#[derive(Serialize, Deserialize)]
struct SkeletonJson {
    dim: usize,
    knots: Vec<Vec<f64>>,
    edges: Vec<EdgeRecord>,
    component: Vec<usize>,
    #[serde(default)]
    meta: serde_json::Value,
}

impl TryFrom<SkeletonJson> for Skeleton {
    type Error = SkelError;

    fn try_from(s: SkeletonJson) -> Result<Self> {
        let knots = if s.knots.is_empty() {
            RowMatrix::zeros(0, s.dim)
        } else {
            RowMatrix::from_rows(&s.knots)?
        };
        if knots.ncols() != s.dim {
            return Err(SkelError::Shape(format!(
                "knots have dimension {} but dim = {}",
                knots.ncols(),
                s.dim
            )));
        }
        let sk = Skeleton::from_parts(knots, s.edges, s.component, s.meta);
        let violations = validate_skeleton(&sk);
        if !violations.is_empty() {
            return Err(SkelError::Degenerate(format!("invalid skeleton: {violations:?}")));
        }
        Ok(sk)
    }
}

impl From<Skeleton> for SkeletonJson {
    fn from(s: Skeleton) -> Self {
        SkeletonJson {
            dim: s.knots.ncols(),
            knots: s.knots.to_rows(),
            edges: s.edges,
            component: s.component,
            meta: s.meta,
        }
    }
}

impl Skeleton {
    /// Assemble a skeleton without validation; see [`validate_skeleton`].
    pub fn from_parts(
        knots: RowMatrix,
        edges: Vec<EdgeRecord>,
        component: Vec<usize>,
        meta: serde_json::Value,
    ) -> Self {
        let edge_lookup = edges
            .iter()
            .enumerate()
            .map(|(e, r)| ((r.i.min(r.j), r.i.max(r.j)), e))
            .collect();
        Self { knots, edges, component, meta, edge_lookup }
    }

    /// Validated constructor.
    pub fn new(
        knots: RowMatrix,
        edges: Vec<EdgeRecord>,
        component: Vec<usize>,
        meta: serde_json::Value,
    ) -> Result<Self> {
        let sk = Self::from_parts(knots, edges, component, meta);
        let v = validate_skeleton(&sk);
        if v.is_empty() {
            Ok(sk)
        } else {
            Err(SkelError::Degenerate(format!("invalid skeleton: {v:?}")))
        }
    }

    /// Skeleton from knots and an edge list; lengths are Euclidean, weights
    /// zero and components the connected components of the edge graph.
    pub fn from_graph(knots: RowMatrix, pairs: &[(usize, usize)]) -> Result<Self> {
        let k = knots.nrows();
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a >= k || b >= k {
                return Err(SkelError::Index(format!("edge ({a},{b}) with {k} knots")));
            }
            let (i, j) = (a.min(b), a.max(b));
            edges.push(EdgeRecord {
                i,
                j,
                length: dist(knots.row(i), knots.row(j)),
                vd_weight: 0.0,
                count: 0,
            });
        }
        let component = connected_components(k, &edges);
        Self::new(knots, edges, component, serde_json::Value::Null)
    }

    pub fn n_knots(&self) -> usize {
        self.knots.nrows()
    }

    pub fn dim(&self) -> usize {
        self.knots.ncols()
    }

    pub fn knots(&self) -> &RowMatrix {
        &self.knots
    }

    pub fn knot(&self, j: usize) -> &[f64] {
        self.knots.row(j)
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &EdgeRecord {
        &self.edges[e]
    }

    pub fn component(&self) -> &[usize] {
        &self.component
    }

    pub fn meta(&self) -> &serde_json::Value {
        &self.meta
    }

    pub fn set_meta(&mut self, meta: serde_json::Value) {
        self.meta = meta;
    }

    /// Index of the edge joining `a` and `b`, in either order.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&(a.min(b), a.max(b))).copied()
    }

    /// Component label of a position.
    pub fn component_of(&self, p: &SkeletonPosition) -> usize {
        match *p {
            SkeletonPosition::Knot { index } => self.component[index],
            SkeletonPosition::EdgePoint { edge, .. } => self.component[self.edges[edge].i],
        }
    }

    /// Knots whose cells a position touches: the knot itself, or both edge endpoints.
    pub fn position_knots(&self, p: &SkeletonPosition) -> (usize, Option<usize>) {
        match *p {
            SkeletonPosition::Knot { index } => (index, None),
            SkeletonPosition::EdgePoint { edge, .. } => {
                let e = &self.edges[edge];
                (e.i, Some(e.j))
            }
        }
    }

    pub fn is_valid_position(&self, p: &SkeletonPosition) -> bool {
        match *p {
            SkeletonPosition::Knot { index } => index < self.n_knots(),
            SkeletonPosition::EdgePoint { edge, t } => edge < self.edges.len() && t > 0.0 && t < 1.0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Connected components of the edge graph, labelled in order of lowest knot index.
pub fn connected_components(k: usize, edges: &[EdgeRecord]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in edges {
        if e.i < k && e.j < k {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut labels = vec![usize::MAX; k];
    let mut root_label = HashMap::new();
    for v in 0..k {
        let r = find(&mut parent, v);
        let next = root_label.len();
        labels[v] = *root_label.entry(r).or_insert(next);
    }
    labels
}

/// Snap a raw edge parameter onto a canonical position.
pub fn canonicalize_position(sk: &Skeleton, edge: usize, t: f64) -> Result<SkeletonPosition> {
    let e = sk
        .edges
        .get(edge)
        .ok_or_else(|| SkelError::Index(format!("edge {edge} of {}", sk.edges.len())))?;
    if !(0.0..=1.0).contains(&t) {
        return Err(SkelError::Index(format!("edge parameter {t} outside [0,1]")));
    }
    Ok(if t == 0.0 {
        SkeletonPosition::knot(e.i)
    } else if t == 1.0 {
        SkeletonPosition::knot(e.j)
    } else {
        SkeletonPosition::EdgePoint { edge, t }
    })
}

/// Ambient coordinates of a skeleton position.
pub fn ambient_location(p: &SkeletonPosition, sk: &Skeleton) -> Vec<f64> {
    match *p {
        SkeletonPosition::Knot { index } => sk.knot(index).to_vec(),
        SkeletonPosition::EdgePoint { edge, t } => {
            let e = sk.edge(edge);
            sk.knot(e.i)
                .iter()
                .zip(sk.knot(e.j))
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect()
        }
    }
}

/// A failing skeleton invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoKnots,
    NonFiniteKnot(usize),
    ComponentLength { expected: usize, found: usize },
    EndpointOutOfRange { edge: usize },
    SelfLoop { edge: usize },
    UnorderedEndpoints { edge: usize },
    DuplicateEdge(usize, usize),
    NonPositiveLength { edge: usize },
    LengthMismatch { edge: usize, stored: f64, actual: f64 },
    NegativeWeight { edge: usize },
    CrossComponentEdge { edge: usize },
}

/// Collect every violated skeleton invariant; empty means well-formed.
pub fn validate_skeleton(sk: &Skeleton) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = sk.n_knots();
    if k == 0 {
        out.push(Violation::NoKnots);
    }
    for j in 0..k {
        if sk.knot(j).iter().any(|v| !v.is_finite()) {
            out.push(Violation::NonFiniteKnot(j));
        }
    }
    let labels_ok = sk.component.len() == k;
    if !labels_ok {
        out.push(Violation::ComponentLength { expected: k, found: sk.component.len() });
    }
    let mut seen = HashMap::new();
    for (idx, e) in sk.edges.iter().enumerate() {
        if e.i >= k || e.j >= k {
            out.push(Violation::EndpointOutOfRange { edge: idx });
            continue;
        }
        if e.i == e.j {
            out.push(Violation::SelfLoop { edge: idx });
            continue;
        }
        if e.i > e.j {
            out.push(Violation::UnorderedEndpoints { edge: idx });
        }
        let key = (e.i.min(e.j), e.i.max(e.j));
        if seen.insert(key, idx).is_some() {
            out.push(Violation::DuplicateEdge(key.0, key.1));
        }
        let actual = dist(sk.knot(e.i), sk.knot(e.j));
        if !(e.length > 0.0) {
            out.push(Violation::NonPositiveLength { edge: idx });
        } else if (e.length - actual).abs() > 1e-12 * actual.max(f64::MIN_POSITIVE) {
            out.push(Violation::LengthMismatch { edge: idx, stored: e.length, actual });
        }
        if !(e.vd_weight >= 0.0) {
            out.push(Violation::NegativeWeight { edge: idx });
        }
        if labels_ok && sk.component[e.i] != sk.component[e.j] {
            out.push(Violation::CrossComponentEdge { edge: idx });
        }
    }
    out
}

/// Projected covariates and responses living on one skeleton.
#[derive(Debug, Clone)]
pub struct RegressionDataset<'a> {
    pub positions: Vec<SkeletonPosition>,
    pub responses: Vec<f64>,
    pub skeleton: &'a Skeleton,
}

impl<'a> RegressionDataset<'a> {
    pub fn new(
        skeleton: &'a Skeleton,
        positions: Vec<SkeletonPosition>,
        responses: Vec<f64>,
    ) -> Result<Self> {
        if positions.len() != responses.len() {
            return Err(SkelError::Shape(format!(
                "{} positions for {} responses",
                positions.len(),
                responses.len()
            )));
        }
        if let Some(p) = positions.iter().find(|p| !skeleton.is_valid_position(p)) {
            return Err(SkelError::Index(format!("position {p} not on skeleton")));
        }
        if responses.iter().any(|y| !y.is_finite()) {
            return Err(SkelError::Shape("non-finite response".into()));
        }
        Ok(Self { positions, responses, skeleton })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}
