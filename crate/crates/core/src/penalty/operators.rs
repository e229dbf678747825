use nalgebra::DMatrix;

use crate::types::Skeleton;

/// Incidence, Laplacian and trend-filtering matrices of a skeleton graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOperators {
    /// `k x m`, entries in {0, 1}.
    pub incidence: DMatrix<f64>,
    /// `k x m`, +1 at the lower-indexed endpoint and -1 at the other.
    pub signed_incidence: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    pub order: usize,
    /// `L^((q+1)/2)` for odd `q`, `B_signed' L^(q/2)` for even `q`.
    pub delta: DMatrix<f64>,
}

fn mat_pow(a: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..p {
        out = &out * a;
    }
    out
}

pub fn graph_operators(sk: &Skeleton, order: usize) -> GraphOperators {
    let (k, m) = (sk.n_knots(), sk.edges().len());
    let mut incidence = DMatrix::zeros(k, m);
    let mut signed_incidence = DMatrix::zeros(k, m);
    let mut adjacency = DMatrix::zeros(k, k);
    for (e, rec) in sk.edges().iter().enumerate() {
        incidence[(rec.i, e)] = 1.0;
        incidence[(rec.j, e)] = 1.0;
        signed_incidence[(rec.i, e)] = 1.0;
        signed_incidence[(rec.j, e)] = -1.0;
        adjacency[(rec.i, rec.j)] = 1.0;
        adjacency[(rec.j, rec.i)] = 1.0;
    }
    let degree = DMatrix::from_diagonal(&adjacency.column_sum());
    let laplacian = degree - adjacency;
    let delta = if order % 2 == 1 {
        mat_pow(&laplacian, order.div_ceil(2))
    } else {
        signed_incidence.transpose() * mat_pow(&laplacian, order / 2)
    };
    GraphOperators { incidence, signed_incidence, laplacian, order, delta }
}
