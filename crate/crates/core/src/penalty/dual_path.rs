//! Dual path algorithm for the generalized lasso signal approximator
//!
//! ```text
//! minimize_beta  1/2 ||y - beta||^2 + lambda ||D beta||_1
//! ```
//!
//! The dual variable `u` (one entry per row of `D`) is tracked as `lambda`
//! decreases from infinity. Between events the boundary set `B` (rows with
//! `|u_i| = lambda`) is fixed and the interior coordinates move linearly,
//! `u_{-B}(lambda) = a - lambda b`. An event is either an interior coordinate
//! hitting the box or a boundary coordinate leaving it. The primal solution
//! is recovered as `beta = y - D' u`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SkelError};
use crate::linalg::sym_pinv;

/// Solution at one event of the path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathKnot {
    pub lambda: f64,
    pub u: DVector<f64>,
    pub beta: DVector<f64>,
    /// Boundary rows and their signs in effect just below `lambda`.
    pub boundary: Vec<usize>,
    pub signs: Vec<f64>,
}

/// Linear piece of the dual path valid on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
struct Segment {
    hi: f64,
    lo: f64,
    boundary: Vec<usize>,
    signs: Vec<f64>,
    interior: Vec<usize>,
    a: DVector<f64>,
    b: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualPath {
    pub knots: Vec<PathKnot>,
    segments: Vec<Segment>,
    d: DMatrix<f64>,
    y: DVector<f64>,
}

impl DualPath {
    pub fn lambdas(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.lambda).collect()
    }

    /// Dual solution at any `lambda >= 0` by linear interpolation.
    pub fn dual_at(&self, lambda: f64) -> DVector<f64> {
        if lambda <= 0.0 {
            return DVector::zeros(self.d.nrows());
        }
        let seg = self
            .segments
            .iter()
            .find(|s| lambda >= s.lo && lambda <= s.hi)
            .or_else(|| self.segments.last())
            .expect("path has at least one segment");
        eval_dual(seg, lambda, self.d.nrows())
    }

    /// Primal solution at any `lambda >= 0`.
    pub fn solution_at(&self, lambda: f64) -> DVector<f64> {
        if lambda <= 0.0 {
            return self.y.clone();
        }
        &self.y - self.d.transpose() * self.dual_at(lambda)
    }
}

fn eval_dual(seg: &Segment, lambda: f64, m: usize) -> DVector<f64> {
    let mut u = DVector::zeros(m);
    for (pos, &r) in seg.interior.iter().enumerate() {
        u[r] = seg.a[pos] - lambda * seg.b[pos];
    }
    for (&r, &s) in seg.boundary.iter().zip(&seg.signs) {
        u[r] = lambda * s;
    }
    u
}

fn rows(d: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), d.ncols(), |r, c| d[(idx[r], c)])
}

/// Full solution path; the last knot is the `lambda = 0` terminus where `beta = y`.
pub fn gen_lasso_dual_path(y: &[f64], d: &DMatrix<f64>) -> Result<DualPath> {
    if y.iter().chain(d.iter()).any(|v| !v.is_finite()) {
        return Err(SkelError::Shape("non-finite input to the dual path".into()));
    }
    if d.ncols() != y.len() {
        return Err(SkelError::Shape(format!(
            "penalty has {} columns for a signal of length {}",
            d.ncols(),
            y.len()
        )));
    }
    let m = d.nrows();
    let yv = DVector::from_column_slice(y);
    let scale = yv.amax().max(1.0) * d.amax().max(1.0);
    let tol = 1e-12 * scale;

    let mut boundary: Vec<usize> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    let mut lambda_prev = f64::INFINITY;
    let mut just_left: Option<usize> = None;
    let mut just_added: Option<usize> = None;
    let mut knots = Vec::new();
    let mut segments = Vec::new();

    for _step in 0..(20 * m + 20) {
        let interior: Vec<usize> = (0..m).filter(|r| !boundary.contains(r)).collect();
        let d_int = rows(d, &interior);
        let d_bnd = rows(d, &boundary);
        let s = DVector::from_column_slice(&signs);
        let (gram_pinv, _) = sym_pinv(&(&d_int * d_int.transpose()));
        let bs = d_bnd.transpose() * &s;
        let a = &gram_pinv * (&d_int * &yv);
        let b = &gram_pinv * (&d_int * &bs);

        // next hitting time among interior rows
        let mut hit: Option<(f64, usize, f64)> = None;
        for (pos, &r) in interior.iter().enumerate() {
            if a[pos].abs() <= tol {
                continue;
            }
            // a row that just left may come back, but not at the same instant
            let cap = if Some(r) == just_left { lambda_prev * (1.0 - 1e-10) } else { lambda_prev };
            // a - t b = +t or -t, whichever comes first below lambda_prev
            for sign in [1.0, -1.0] {
                let denom = b[pos] + sign;
                if denom == 0.0 {
                    continue;
                }
                let t = a[pos] / denom;
                if t > 0.0 && t <= cap && hit.is_none_or(|(h, _, _)| t > h) {
                    hit = Some((t, r, sign));
                }
            }
        }

        // next leaving time among boundary rows
        let mut leave: Option<(f64, usize)> = None;
        if !boundary.is_empty() {
            let proj_y = &yv - d_int.transpose() * (&gram_pinv * (&d_int * &yv));
            let proj_bs = &bs - d_int.transpose() * (&gram_pinv * (&d_int * &bs));
            let c = (&d_bnd * proj_y).component_mul(&s);
            let dd = (&d_bnd * proj_bs).component_mul(&s);
            for (pos, &r) in boundary.iter().enumerate() {
                let cap = if Some(r) == just_added { lambda_prev * (1.0 - 1e-10) } else { lambda_prev };
                if c[pos] < 0.0 && dd[pos] < 0.0 {
                    let t = c[pos] / dd[pos];
                    if t > 0.0 && t <= cap && leave.is_none_or(|(l, _)| t > l) {
                        leave = Some((t, r));
                    }
                }
            }
        }

        let h = hit.map_or(0.0, |x| x.0);
        let l = leave.map_or(0.0, |x| x.0);
        let next = h.max(l);
        let mut seg = Segment {
            hi: lambda_prev,
            lo: next,
            boundary: boundary.clone(),
            signs: signs.clone(),
            interior,
            a,
            b,
        };
        if next <= 0.0 {
            seg.lo = 0.0;
            segments.push(seg);
            knots.push(PathKnot {
                lambda: 0.0,
                u: DVector::zeros(m),
                beta: yv.clone(),
                boundary: boundary.clone(),
                signs: signs.clone(),
            });
            return Ok(DualPath { knots, segments, d: d.clone(), y: yv });
        }
        let u = eval_dual(&seg, next, m);
        let beta = &yv - d.transpose() * &u;
        segments.push(seg);

        if h >= l {
            let (_, r, sign) = hit.expect("hit time is positive");
            boundary.push(r);
            signs.push(sign);
            just_added = Some(r);
            just_left = None;
        } else {
            let (_, r) = leave.expect("leave time is positive");
            let pos = boundary.iter().position(|&x| x == r).expect("leaving row is on the boundary");
            boundary.remove(pos);
            signs.remove(pos);
            just_left = Some(r);
            just_added = None;
        }
        knots.push(PathKnot { lambda: next, u, beta, boundary: boundary.clone(), signs: signs.clone() });
        lambda_prev = next;
    }
    Err(SkelError::Convergence { iterations: 20 * m + 20, gap: lambda_prev })
}
