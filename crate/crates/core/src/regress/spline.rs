//! Linear spline on the skeleton: values on knots, linear along edges.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::lstsq_min_norm;
use crate::types::{Skeleton, SkeletonPosition};

/// Barycentric coordinates of a position: `(knot, weight)` pairs.
#[inline]
pub fn spline_weights(p: &SkeletonPosition, sk: &Skeleton) -> [(usize, f64); 2] {
    match *p {
        SkeletonPosition::Knot { index } => [(index, 1.0), (index, 0.0)],
        SkeletonPosition::EdgePoint { edge, t } => {
            let e = sk.edge(edge);
            [(e.i, 1.0 - t), (e.j, t)]
        }
    }
}

/// The `n x k` transformed design: each row holds the barycentric
/// coordinates of the position with respect to its edge endpoints.
pub fn spline_transform(positions: &[SkeletonPosition], sk: &Skeleton) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(positions.len(), sk.n_knots());
    for (r, p) in positions.iter().enumerate() {
        for (c, w) in spline_weights(p, sk) {
            z[(r, c)] += w;
        }
    }
    z
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineFit {
    pub beta: Vec<f64>,
    pub rank: usize,
    /// Knots with no incident data; their coefficient is pinned to 0.
    pub unsupported: Vec<usize>,
}

/// Minimum-norm least squares for the knot values (no intercept).
pub fn spline_fit(z: &DMatrix<f64>, y: &[f64]) -> SplineFit {
    let (beta, rank) = lstsq_min_norm(z, &DVector::from_column_slice(y));
    let unsupported: Vec<usize> =
        (0..z.ncols()).filter(|&c| z.column(c).iter().all(|&v| v == 0.0)).collect();
    if !unsupported.is_empty() {
        log::warn!("knots without incident data: {unsupported:?}");
    }
    SplineFit { beta: beta.iter().copied().collect(), rank, unsupported }
}

pub fn spline_predict(p: &SkeletonPosition, beta: &[f64], sk: &Skeleton) -> f64 {
    spline_weights(p, sk).iter().map(|&(c, w)| w * beta[c]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix_rank;
    use crate::types::RowMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> Skeleton {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        Skeleton::from_graph(RowMatrix::from_rows(&rows).unwrap(), &[(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn rows_of_z() {
        let sk = square();
        let z = spline_transform(
            &[
                SkeletonPosition::knot(2),
                SkeletonPosition::EdgePoint { edge: 0, t: 0.5 },
                SkeletonPosition::EdgePoint { edge: 1, t: 0.25 },
            ],
            &sk,
        );
        assert_eq!(z.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(z.row(1).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.5, 0.0, 0.0]);
        assert_eq!(z.row(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.75, 0.25, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let beta: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let direct = beta[1] + 0.25 * (beta[2] - beta[1]);
        let via_z: f64 = z.row(2).iter().zip(&beta).map(|(a, b)| a * b).sum();
        assert!((direct - via_z).abs() < 1e-15);
    }

    #[test]
    fn constant_response_reproduced() {
        let sk = square();
        let pos: Vec<SkeletonPosition> = (1..10)
            .map(|i| SkeletonPosition::EdgePoint { edge: i % 3, t: i as f64 / 10.0 })
            .collect();
        let z = spline_transform(&pos, &sk);
        let fit = spline_fit(&z, &vec![2.5; pos.len()]);
        assert!(fit.beta.iter().all(|b| (b - 2.5).abs() < 1e-10));
        assert!(fit.unsupported.is_empty());
    }

    #[test]
    fn interpolates_knot_data() {
        let sk = square();
        let pos: Vec<SkeletonPosition> = (0..4).map(SkeletonPosition::knot).collect();
        let y = [1.0, -2.0, 3.5, 0.25];
        let fit = spline_fit(&spline_transform(&pos, &sk), &y);
        for (b, v) in fit.beta.iter().zip(y) {
            assert!((b - v).abs() < 1e-12);
        }
        assert_eq!(fit.rank, 4);
    }

    #[test]
    fn matches_normal_equations() {
        let sk = square();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pos: Vec<SkeletonPosition> = (0..20)
            .map(|_| SkeletonPosition::EdgePoint { edge: rng.random_range(0..3), t: rng.random_range(0.01..0.99) })
            .collect();
        let y: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
        let z = spline_transform(&pos, &sk);
        let fit = spline_fit(&z, &y);
        // oracle: Cholesky on Z^T Z
        let gram = z.transpose() * &z;
        let rhs = z.transpose() * DVector::from_vec(y.clone());
        let oracle = gram.cholesky().unwrap().solve(&rhs);
        for c in 0..4 {
            assert!((fit.beta[c] - oracle[c]).abs() < 1e-9);
        }
        // residual orthogonal to the column space
        let resid = DVector::from_vec(y.clone()) - &z * DVector::from_vec(fit.beta.clone());
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((z.transpose() * resid).amax() < 1e-8 * ynorm);
    }

    #[test]
    fn untouched_knot_gets_zero() {
        let sk = square();
        let pos = vec![SkeletonPosition::EdgePoint { edge: 0, t: 0.3 }, SkeletonPosition::knot(1)];
        let z = spline_transform(&pos, &sk);
        let fit = spline_fit(&z, &[1.0, 2.0]);
        assert_eq!(fit.unsupported, vec![2, 3]);
        assert_eq!(fit.beta[2], 0.0);
        assert!(matrix_rank(&z) <= 4);
    }

    #[test]
    fn predictions_on_edges() {
        let sk = square();
        let beta = [1.0, 3.0, -1.0, 0.0];
        assert_eq!(spline_predict(&SkeletonPosition::knot(2), &beta, &sk), -1.0);
        assert_eq!(spline_predict(&SkeletonPosition::EdgePoint { edge: 0, t: 0.5 }, &beta, &sk), 2.0);
        let f = |t: f64| spline_predict(&SkeletonPosition::EdgePoint { edge: 1, t }, &beta, &sk);
        assert!((f(0.2) - 2.0 * f(0.4) + f(0.6)).abs() < 1e-12);
    }
}
