//! Seeded synthetic benchmarks: Yinyang, Noisy Yinyang and SwissRoll, plus
//! Gaussian noise-dimension augmentation.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SkelError};
use crate::types::{PointCloud, RowMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    Yinyang,
    NoisyYinyang,
    Swissroll,
}

impl FromStr for Dataset {
    type Err = SkelError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "yinyang" => Ok(Dataset::Yinyang),
            "noisy_yinyang" => Ok(Dataset::NoisyYinyang),
            "swissroll" => Ok(Dataset::Swissroll),
            other => Err(SkelError::Config(format!("unknown dataset '{other}'"))),
        }
    }
}

impl Dataset {
    pub fn default_sizes(self) -> Vec<usize> {
        match self {
            Dataset::Yinyang => vec![2000, 400, 400, 200, 200],
            Dataset::NoisyYinyang => vec![2000, 400, 400, 200, 200, 800],
            Dataset::Swissroll => vec![2000],
        }
    }

    pub fn intrinsic_dim(self) -> usize {
        match self {
            Dataset::Swissroll => 3,
            _ => 2,
        }
    }
}

/// Yinyang shape constants. Calibration values, kept together so they can be
/// changed in one place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YinyangGeometry {
    pub ring_radius: f64,
    pub ring_sd: f64,
    pub left_moon: [f64; 2],
    pub right_moon: [f64; 2],
    pub moon_r: [f64; 2],
    pub upper_left: [f64; 2],
    pub bottom_right: [f64; 2],
    pub cluster_sd: f64,
    pub noise_half_width: f64,
}

impl Default for YinyangGeometry {
    fn default() -> Self {
        Self {
            ring_radius: 5.0,
            ring_sd: 0.1,
            left_moon: [-1.2, 0.6],
            right_moon: [1.2, -0.6],
            moon_r: [0.8, 1.2],
            upper_left: [-2.6, 2.6],
            bottom_right: [2.6, -2.6],
            cluster_sd: 0.2,
            noise_half_width: 3.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub dataset: Dataset,
    pub sizes: Vec<usize>,
    pub ambient_dim: usize,
    /// Response noise; variance unless `scale_is_sd`.
    pub noise: f64,
    /// Appended-covariate noise; variance unless `scale_is_sd`.
    pub dim_noise: f64,
    pub scale_is_sd: bool,
    pub seed: u64,
    pub geometry: YinyangGeometry,
}

impl GenSpec {
    pub fn new(dataset: Dataset, ambient_dim: usize, seed: u64) -> Self {
        let (noise, dim_noise) = match dataset {
            Dataset::Swissroll => (0.3, 0.1),
            _ => (0.01, 0.01),
        };
        Self {
            dataset,
            sizes: dataset.default_sizes(),
            ambient_dim,
            noise,
            dim_noise,
            scale_is_sd: false,
            seed,
            geometry: YinyangGeometry::default(),
        }
    }

    /// Default proportions rescaled to `n` total points (largest remainder).
    pub fn with_total(mut self, n: usize) -> Self {
        let base = self.dataset.default_sizes();
        let total: usize = base.iter().sum();
        let mut sizes: Vec<usize> = base.iter().map(|&s| s * n / total).collect();
        let mut rem: Vec<(usize, usize)> = base.iter().enumerate().map(|(i, &s)| (s * n % total, i)).collect();
        rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let short = n - sizes.iter().sum::<usize>();
        for &(_, i) in rem.iter().take(short) {
            sizes[i] += 1;
        }
        self.sizes = sizes;
        self
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn sd(&self, v: f64) -> f64 {
        if self.scale_is_sd {
            v
        } else {
            v.sqrt()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let want = self.dataset.default_sizes().len();
        if self.sizes.len() != want {
            return Err(SkelError::Config(format!("{:?} needs {want} component sizes", self.dataset)));
        }
        if self.sizes.contains(&0) {
            return Err(SkelError::Config("component sizes must be positive".into()));
        }
        if self.ambient_dim < self.dataset.intrinsic_dim() {
            return Err(SkelError::Config(format!(
                "ambient_dim {} below intrinsic dimension {}",
                self.ambient_dim,
                self.dataset.intrinsic_dim()
            )));
        }
        if !(self.noise >= 0.0 && self.dim_noise >= 0.0) {
            return Err(SkelError::Config("noise scales must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Generated sample with everything needed to replay its responses.
#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub cloud: PointCloud,
    /// Structure label; -1 marks uniform background noise.
    pub component: Vec<i64>,
    /// Per-point intrinsic coordinates: (angle, radius) on the ring and
    /// moons, offset from centre in the clusters, location for background
    /// noise, and (theta, X2) on the SwissRoll.
    pub intrinsic: Vec<[f64; 2]>,
    pub noiseless: Vec<f64>,
    pub eps: Vec<f64>,
}

impl SimData {
    pub fn responses(&self) -> &[f64] {
        self.cloud.responses().expect("generated data carries responses")
    }
}

/// Noiseless response from a point's structure label and intrinsic coordinates.
pub fn noiseless_response(dataset: Dataset, component: i64, intrinsic: [f64; 2]) -> f64 {
    match dataset {
        Dataset::Swissroll => swissroll_response(intrinsic[0], intrinsic[1]),
        _ => match component {
            0 => (intrinsic[0] * 4.0).sin() + 1.5,
            1 => 2.0,
            2 => 1.0,
            3 => 3.0,
            4 => 0.0,
            _ => 1.5,
        },
    }
}

pub fn swissroll_response(theta: f64, x2: f64) -> f64 {
    let tt = theta - 2.0 * PI;
    let gate = f64::from(u8::from(x2 < PI)) + f64::from(u8::from(2.0 * PI < x2 && x2 < 3.0 * PI));
    0.1 * tt.powi(3) * gate
}

pub fn generate(spec: &GenSpec) -> Result<SimData> {
    match spec.dataset {
        Dataset::Yinyang => gen_yinyang(spec),
        Dataset::NoisyYinyang => gen_noisy_yinyang(spec),
        Dataset::Swissroll => gen_swissroll(spec),
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("finite nonnegative sd")
}

struct Draft {
    coords: Vec<Vec<f64>>,
    component: Vec<i64>,
    intrinsic: Vec<[f64; 2]>,
}

fn yinyang_structures(spec: &GenSpec, rng: &mut ChaCha8Rng, draft: &mut Draft) {
    let g = &spec.geometry;
    let jitter = normal(g.ring_sd);
    let cluster = normal(g.cluster_sd);
    for (c, &size) in spec.sizes.iter().take(5).enumerate() {
        for _ in 0..size {
            let (xy, intr) = match c {
                0 => {
                    let th = rng.random_range(0.0..2.0 * PI);
                    let r = g.ring_radius + jitter.sample(rng);
                    ([r * th.cos(), r * th.sin()], [th, r])
                }
                1 | 2 => {
                    let (centre, lo) = if c == 1 { (g.left_moon, 0.0) } else { (g.right_moon, PI) };
                    let a = rng.random_range(lo..lo + PI);
                    let r = rng.random_range(g.moon_r[0]..g.moon_r[1]);
                    ([centre[0] + r * a.cos(), centre[1] + r * a.sin()], [a, r])
                }
                _ => {
                    let centre = if c == 3 { g.upper_left } else { g.bottom_right };
                    let off = [cluster.sample(rng), cluster.sample(rng)];
                    ([centre[0] + off[0], centre[1] + off[1]], off)
                }
            };
            draft.coords.push(xy.to_vec());
            draft.component.push(c as i64);
            draft.intrinsic.push(intr);
        }
    }
}

fn finish(spec: &GenSpec, draft: Draft, rng: &mut ChaCha8Rng) -> Result<SimData> {
    let eps_law = normal(spec.sd(spec.noise));
    let mut noiseless = Vec::with_capacity(draft.coords.len());
    let mut eps = Vec::with_capacity(draft.coords.len());
    for (c, intr) in draft.component.iter().zip(&draft.intrinsic) {
        noiseless.push(noiseless_response(spec.dataset, *c, *intr));
        eps.push(eps_law.sample(rng));
    }
    let y = noiseless.iter().zip(&eps).map(|(m, e)| m + e).collect();
    let base = PointCloud::new(RowMatrix::from_rows(&draft.coords)?, Some(y))?;
    let cloud = add_noise_dims(&base, spec.ambient_dim, spec.sd(spec.dim_noise), spec.seed)?;
    Ok(SimData { cloud, component: draft.component, intrinsic: draft.intrinsic, noiseless, eps })
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gen_yinyang(spec: &GenSpec) -> Result<SimData> {
    let mut spec = spec.clone();
    spec.dataset = Dataset::Yinyang;
    spec.sizes.truncate(5);
    spec.validate()?;
    let mut rng = rng_for(spec.seed);
    let mut draft = Draft { coords: vec![], component: vec![], intrinsic: vec![] };
    yinyang_structures(&spec, &mut rng, &mut draft);
    finish(&spec, draft, &mut rng)
}

pub fn gen_noisy_yinyang(spec: &GenSpec) -> Result<SimData> {
    let mut spec = spec.clone();
    spec.dataset = Dataset::NoisyYinyang;
    spec.validate()?;
    let mut rng = rng_for(spec.seed);
    let mut draft = Draft { coords: vec![], component: vec![], intrinsic: vec![] };
    yinyang_structures(&spec, &mut rng, &mut draft);
    let w = spec.geometry.noise_half_width;
    for _ in 0..spec.sizes[5] {
        let xy = [rng.random_range(-w..=w), rng.random_range(-w..=w)];
        draft.coords.push(xy.to_vec());
        draft.component.push(-1);
        draft.intrinsic.push(xy);
    }
    finish(&spec, draft, &mut rng)
}

pub fn gen_swissroll(spec: &GenSpec) -> Result<SimData> {
    let mut spec = spec.clone();
    spec.dataset = Dataset::Swissroll;
    spec.validate()?;
    let mut rng = rng_for(spec.seed);
    let mut draft = Draft { coords: vec![], component: vec![], intrinsic: vec![] };
    for _ in 0..spec.sizes[0] {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let th = PI * 3f64.powf(u1);
        let x2 = 4.0 * u2;
        draft.coords.push(vec![th * th.cos(), x2, th * th.sin()]);
        draft.component.push(0);
        draft.intrinsic.push([th, x2]);
    }
    finish(&spec, draft, &mut rng)
}

/// Append i.i.d. `N(0, sd^2)` columns up to `target_d`; existing columns are
/// copied unchanged.
pub fn add_noise_dims(p: &PointCloud, target_d: usize, sd: f64, seed: u64) -> Result<PointCloud> {
    let d = p.dim();
    if target_d < d {
        return Err(SkelError::Config(format!("target dimension {target_d} below current {d}")));
    }
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(SkelError::Config(format!("invalid noise sd {sd}")));
    }
    if target_d == d {
        return Ok(p.clone());
    }
    let mut rng = rng_for(seed);
    rng.set_stream(1);
    let law = normal(sd);
    let mut data = Vec::with_capacity(p.n() * target_d);
    for i in 0..p.n() {
        data.extend_from_slice(p.point(i));
        data.extend((d..target_d).map(|_| law.sample(&mut rng)));
    }
    PointCloud::new(RowMatrix::new(p.n(), target_d, data)?, p.responses().map(<[f64]>::to_vec))
}
