//! Lloyd's k-means with k-means++ seeding and independent restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SkelError};
use crate::par::{self, Execution};
use crate::types::{sq_dist, PointCloud, RowMatrix};

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub knots: RowMatrix,
    pub assignment: Vec<usize>,
    pub objective: f64,
    /// Objective after every assignment step of the selected run.
    pub history: Vec<f64>,
    /// Final objective of every restart, in restart order.
    pub restart_objectives: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct KMeansParams {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub execution: Execution,
}

/// Nearest center (lowest index on ties) and its squared distance.
#[inline]
pub(crate) fn nearest(x: &[f64], centers: &RowMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.nrows() {
        let d = sq_dist(x, centers.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &PointCloud, centers: &RowMatrix, exec: Execution) -> (Vec<usize>, Vec<f64>, f64) {
    let pairs = par::map_range(exec, points.n(), |i| nearest(points.point(i), centers));
    let (labels, d2): (Vec<usize>, Vec<f64>) = pairs.into_iter().unzip();
    let obj = d2.iter().sum();
    (labels, d2, obj)
}

fn seed_plus_plus(points: &PointCloud, k: usize, rng: &mut ChaCha8Rng) -> RowMatrix {
    let n = points.n();
    let mut centers = RowMatrix::zeros(k, points.dim());
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from_slice(points.point(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.point(i), centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    chosen = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            chosen.expect("positive total weight")
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from_slice(points.point(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.point(i), centers.row(c)));
        }
    }
    centers
}

fn lloyd(points: &PointCloud, mut centers: RowMatrix, p: &KMeansParams) -> KMeansFit {
    let (n, dim, k) = (points.n(), points.dim(), centers.nrows());
    let mut history = Vec::new();
    let mut iter = 0;
    loop {
        let (labels, mut d2, obj) = assign(points, &centers, p.execution);
        let converged = match history.last() {
            Some(&prev) => obj == 0.0 || (prev - obj) <= p.tol * prev,
            None => obj == 0.0,
        };
        history.push(obj);
        iter += 1;
        if converged || iter > p.max_iter {
            return KMeansFit {
                knots: centers,
                assignment: labels,
                objective: obj,
                history,
                restart_objectives: Vec::new(),
            };
        }

        let mut sums = RowMatrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, x) in sums.row_mut(labels[i]).iter_mut().zip(points.point(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            } else {
                // empty cluster: move it onto the worst-served point
                let mut far = 0;
                for i in 1..n {
                    if d2[i] > d2[far] {
                        far = i;
                    }
                }
                centers.row_mut(c).copy_from_slice(points.point(far));
                d2[far] = 0.0;
            }
        }
    }
}

/// Best of `restarts` Lloyd runs by within-cluster sum of squares.
pub fn build_knots(points: &PointCloud, p: &KMeansParams) -> Result<KMeansFit> {
    if p.k == 0 || p.k > points.n() {
        return Err(SkelError::Config(format!(
            "n_knots = {} must lie in 1..={}",
            p.k,
            points.n()
        )));
    }
    if p.restarts == 0 || p.max_iter == 0 {
        return Err(SkelError::Config("restarts and max_iter must be positive".into()));
    }
    // Inner loops run sequentially when restarts already fan out.
    let inner = KMeansParams {
        execution: if p.restarts > 1 { Execution::Sequential } else { p.execution },
        ..*p
    };
    let runs = par::map_range(p.execution, p.restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        rng.set_stream(r as u64);
        let init = seed_plus_plus(points, p.k, &mut rng);
        lloyd(points, init, &inner)
    });
    let restart_objectives: Vec<f64> = runs.iter().map(|r| r.objective).collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.objective < runs[best].objective {
            best = r;
        }
    }
    let mut fit = runs.into_iter().nth(best).expect("at least one restart");
    fit.restart_objectives = restart_objectives;
    Ok(fit)
}
