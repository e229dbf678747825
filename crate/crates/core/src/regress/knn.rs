//! k-nearest-neighbour regression on skeleton distances, keeping every tie
//! at the k-th radius.

use crate::error::{Result, SkelError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnPrediction {
    pub value: f64,
    /// Fewer than `k` finite-distance neighbours existed; all were used.
    pub short: bool,
}

pub fn knn_predict(responses: &[f64], dists: &[f64], k: usize) -> Result<KnnPrediction> {
    if k == 0 {
        return Err(SkelError::Config("k must be at least 1".into()));
    }
    let mut finite: Vec<f64> = dists.iter().copied().filter(|d| d.is_finite()).collect();
    if finite.is_empty() {
        return Err(SkelError::NoSupport("no finite-distance neighbours".into()));
    }
    let short = finite.len() < k;
    let radius = if finite.len() <= k {
        f64::INFINITY
    } else {
        *finite.select_nth_unstable_by(k - 1, f64::total_cmp).1
    };
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&y, &d) in responses.iter().zip(dists) {
        if d.is_finite() && d <= radius {
            sum += y;
            count += 1;
        }
    }
    Ok(KnnPrediction { value: sum / count as f64, short })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_one() {
        let p = knn_predict(&[1.0, 2.0, 3.0], &[0.5, 0.1, 0.9], 1).unwrap();
        assert_eq!(p, KnnPrediction { value: 2.0, short: false });
    }

    #[test]
    fn ties_at_radius_all_included() {
        // k=2 but three points share the second-smallest distance
        let y = [10.0, 1.0, 2.0, 3.0, 99.0];
        let d = [0.1, 0.5, 0.5, 0.5, 2.0];
        let p = knn_predict(&y, &d, 2).unwrap();
        assert_eq!(p.value, (10.0 + 1.0 + 2.0 + 3.0) / 4.0);
    }

    #[test]
    fn k_at_least_n_is_finite_mean() {
        let y = [1.0, 2.0, 3.0, 50.0];
        let d = [0.1, 0.2, 0.3, f64::INFINITY];
        let p = knn_predict(&y, &d, 3).unwrap();
        assert_eq!(p, KnnPrediction { value: 2.0, short: false });
        let q = knn_predict(&y, &d, 4).unwrap();
        assert_eq!(q, KnnPrediction { value: 2.0, short: true });
    }

    #[test]
    fn no_support() {
        assert!(matches!(
            knn_predict(&[1.0], &[f64::INFINITY], 1),
            Err(SkelError::NoSupport(_))
        ));
    }
}
