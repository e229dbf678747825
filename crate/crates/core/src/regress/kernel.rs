//! Nadaraya-Watson smoothing with skeleton distances.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkelError};
use crate::types::{dist, Skeleton};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl KernelFamily {
    #[inline]
    pub fn weight(self, u: f64) -> f64 {
        match self {
            KernelFamily::Gaussian => (-0.5 * u * u).exp(),
            KernelFamily::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = SkelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            other => Err(SkelError::Config(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Absolute bandwidth, or a multiple of [`r_hns`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "unit", content = "value", rename_all = "snake_case")]
pub enum Bandwidth {
    Absolute(f64),
    Rhns(f64),
}

impl Bandwidth {
    pub fn resolve(self, sk: &Skeleton) -> Result<f64> {
        let h = match self {
            Bandwidth::Absolute(h) => h,
            Bandwidth::Rhns(m) => m * r_hns(sk)?,
        };
        if !(h > 0.0 && h.is_finite()) {
            return Err(SkelError::Config(format!("bandwidth must be positive, got {h}")));
        }
        Ok(h)
    }
}

impl std::str::FromStr for Bandwidth {
    type Err = SkelError;

    /// `"0.3"` is absolute, `"4rhns"` a multiple of the knot spacing.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (num, rel) = match s.strip_suffix("rhns") {
            Some(head) => (head.trim(), true),
            None => (s, false),
        };
        let v: f64 = num
            .parse()
            .map_err(|_| SkelError::Config(format!("bad bandwidth '{s}'")))?;
        if !(v > 0.0) {
            return Err(SkelError::Config(format!("bandwidth must be positive, got '{s}'")));
        }
        Ok(if rel { Bandwidth::Rhns(v) } else { Bandwidth::Absolute(v) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: Bandwidth,
}

/// Mean Euclidean distance from each knot to its nearest knot in the same
/// component. Knots alone in their component are skipped.
pub fn r_hns(sk: &Skeleton) -> Result<f64> {
    let k = sk.n_knots();
    let comp = sk.component();
    let mut total = 0.0;
    let mut used = 0usize;
    for a in 0..k {
        let mut best = f64::INFINITY;
        for b in 0..k {
            if a != b && comp[a] == comp[b] {
                best = best.min(dist(sk.knot(a), sk.knot(b)));
            }
        }
        if best.is_finite() {
            total += best;
            used += 1;
        }
    }
    if used == 0 {
        return Err(SkelError::Degenerate(
            "every knot is alone in its component; r_hns undefined".into(),
        ));
    }
    Ok(total / used as f64)
}

/// Kernel-weighted mean of `responses` given the distance row to the query.
/// Infinite distances carry no weight.
pub fn kernel_predict(responses: &[f64], dists: &[f64], family: KernelFamily, h: f64) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&y, &d) in responses.iter().zip(dists) {
        if d.is_finite() {
            let w = family.weight(d / h);
            num += w * y;
            den += w;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(SkelError::NoSupport("all kernel weights vanish".into()))
    }
}
