//! Cross-validation harness: baselines, k-fold CV over a grid of skeleton
//! and baseline methods, and repeated-dataset experiments.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builder::{build_skeleton, BuildConfig, Linkage};
use crate::datagen::{generate, Dataset, GenSpec};
use crate::error::{Result, SkelError};
use crate::linalg::{lstsq_min_norm, sym_pinv};
use crate::metric::{knot_paths, pairwise_distances, project_all, KnotPathTable};
use crate::par::{self, Execution};
use crate::penalty::{gen_lasso_fixed_lambda, graph_operators, penalized_spline_fit, LassoOptions, Penalty};
use crate::regress::{
    kernel_predict, knn_predict, r_hns, spline_predict, spline_transform, ComponentMeans, KernelFamily,
};
use crate::types::{sq_dist, PointCloud, RowMatrix, Skeleton, SkeletonPosition};

/// Skeleton shape shared by the skeleton-based methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SkeletonKey {
    pub knots: usize,
    pub components: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    /// Bandwidth is a multiple of `r_hns` on the fold's skeleton.
    SKernel { skeleton: SkeletonKey, family: KernelFamily, bandwidth: f64 },
    SKnn { skeleton: SkeletonKey, k: usize },
    SLspline { skeleton: SkeletonKey, penalty: Penalty },
    Knn { k: usize },
    Ridge { lambda: f64 },
    Lasso { lambda: f64 },
    /// Training mean; a reference point for the other methods.
    Mean,
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::SKernel { .. } => "skernel",
            MethodSpec::SKnn { .. } => "sknn",
            MethodSpec::SLspline { penalty: Penalty::None, .. } => "slspline",
            MethodSpec::SLspline { penalty: Penalty::LapSmooth { .. }, .. } => "slspline_lapsmooth",
            MethodSpec::SLspline { penalty: Penalty::TrendFilter { .. }, .. } => "slspline_trendfilter",
            MethodSpec::Knn { .. } => "knn",
            MethodSpec::Ridge { .. } => "ridge",
            MethodSpec::Lasso { .. } => "lasso",
            MethodSpec::Mean => "mean",
        }
    }

    /// Parameter names and values, in the order used for labels and ties.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        let sk = |s: &SkeletonKey| vec![("knots", s.knots as f64), ("components", s.components as f64)];
        match self {
            MethodSpec::SKernel { skeleton, bandwidth, .. } => {
                let mut v = sk(skeleton);
                v.push(("bandwidth", *bandwidth));
                v
            }
            MethodSpec::SKnn { skeleton, k } => {
                let mut v = sk(skeleton);
                v.push(("k", *k as f64));
                v
            }
            MethodSpec::SLspline { skeleton, penalty } => {
                let mut v = sk(skeleton);
                match penalty {
                    Penalty::None => {}
                    Penalty::LapSmooth { order, lambda } | Penalty::TrendFilter { order, lambda } => {
                        v.push(("order", *order as f64));
                        v.push(("lambda", *lambda));
                    }
                }
                v
            }
            MethodSpec::Knn { k } => vec![("k", *k as f64)],
            MethodSpec::Ridge { lambda } | MethodSpec::Lasso { lambda } => vec![("lambda", *lambda)],
            MethodSpec::Mean => vec![],
        }
    }

    pub fn label(&self) -> String {
        let p: Vec<String> = self.params().iter().map(|(n, v)| format!("{n}={v}")).collect();
        if p.is_empty() {
            "-".into()
        } else {
            p.join(",")
        }
    }

    fn skeleton_key(&self) -> Option<SkeletonKey> {
        match self {
            MethodSpec::SKernel { skeleton, .. } | MethodSpec::SKnn { skeleton, .. } | MethodSpec::SLspline { skeleton, .. } => {
                Some(*skeleton)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvPlan {
    pub n_folds: usize,
    pub seed: u64,
    /// Template for per-fold skeletons; knot and component counts come from
    /// each method's [`SkeletonKey`].
    pub build: BuildConfig,
    pub methods: Vec<MethodSpec>,
    pub execution: Execution,
}

impl CvPlan {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.n_folds < 2 || self.n_folds > n {
            return Err(SkelError::Config(format!("need 2 <= n_folds <= n, got {} for n = {n}", self.n_folds)));
        }
        if self.methods.is_empty() {
            return Err(SkelError::Config("empty method grid".into()));
        }
        Ok(())
    }
}

/// Fold label for each of `n` indices from a seeded permutation; fold sizes
/// differ by at most one.
pub fn kfold_split(n: usize, n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds == 0 || n_folds > n {
        return Err(SkelError::Config(format!("cannot split {n} items into {n_folds} folds")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold[i] = pos % n_folds;
    }
    Ok(fold)
}

/// Mean response of the `k` nearest training points by Euclidean distance,
/// ties broken by index.
pub fn euclidean_knn(train: &RowMatrix, y: &[f64], query: &[f64], k: usize) -> Result<f64> {
    let order = euclidean_order(train, query);
    if k == 0 || k > order.len() {
        return Err(SkelError::Config(format!("k = {k} with {} training points", order.len())));
    }
    Ok(order[..k].iter().map(|&i| y[i]).sum::<f64>() / k as f64)
}

fn euclidean_order(train: &RowMatrix, query: &[f64]) -> Vec<usize> {
    let d: Vec<f64> = (0..train.nrows()).map(|i| sq_dist(train.row(i), query)).collect();
    let mut order: Vec<usize> = (0..train.nrows()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    order
}

/// Linear model `intercept + x . coef`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn centered(x: &RowMatrix, y: &[f64]) -> (DMatrix<f64>, DVector<f64>, Vec<f64>, f64) {
    let (n, d) = (x.nrows(), x.ncols());
    let means: Vec<f64> = (0..d).map(|c| (0..n).map(|r| x.row(r)[c]).sum::<f64>() / n as f64).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let xc = DMatrix::from_fn(n, d, |r, c| x.row(r)[c] - means[c]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - ybar));
    (xc, yc, means, ybar)
}

fn finish_linear(beta: &DVector<f64>, means: &[f64], ybar: f64) -> LinearModel {
    let coef: Vec<f64> = beta.iter().copied().collect();
    let intercept = ybar - coef.iter().zip(means).map(|(b, m)| b * m).sum::<f64>();
    LinearModel { intercept, coef }
}

/// Ridge on centred data; the intercept is not penalized.
pub fn ridge_baseline(x: &RowMatrix, y: &[f64], lambda: f64) -> Result<LinearModel> {
    if !(lambda >= 0.0) {
        return Err(SkelError::Config(format!("lambda must be nonnegative, got {lambda}")));
    }
    let (xc, yc, means, ybar) = centered(x, y);
    let beta = if lambda == 0.0 {
        lstsq_min_norm(&xc, &yc).0
    } else {
        let d = xc.ncols();
        let (inv, _) = sym_pinv(&(xc.transpose() * &xc + DMatrix::identity(d, d) * lambda));
        inv * (xc.transpose() * yc)
    };
    Ok(finish_linear(&beta, &means, ybar))
}

/// Lasso on centred data, solved as a generalized lasso with `D = I`.
pub fn lasso_baseline(x: &RowMatrix, y: &[f64], lambda: f64) -> Result<LinearModel> {
    let (xc, yc, means, ybar) = centered(x, y);
    let d = xc.ncols();
    let beta = gen_lasso_fixed_lambda(&xc, yc.as_slice(), &DMatrix::identity(d, d), lambda, &LassoOptions::default())?;
    Ok(finish_linear(&beta, &means, ybar))
}

/// Percentile by linear interpolation between order statistics.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

struct FoldSkeleton {
    sk: Skeleton,
    table: KnotPathTable,
    train_pos: Vec<SkeletonPosition>,
    test_pos: Vec<SkeletonPosition>,
    means: ComponentMeans,
    dists: Option<Vec<Vec<f64>>>,
}

/// Build the skeleton for one fold. Only `train` is consulted.
pub fn fold_skeleton(train: &PointCloud, key: SkeletonKey, template: &BuildConfig) -> Result<Skeleton> {
    let cfg = BuildConfig { n_knots: Some(key.knots), n_components: key.components, ..template.clone() };
    build_skeleton(train, &cfg)
}

fn prepare(train: &PointCloud, test: &PointCloud, key: SkeletonKey, plan: &CvPlan) -> Result<FoldSkeleton> {
    let build = BuildConfig { execution: plan.execution, ..plan.build.clone() };
    let sk = fold_skeleton(train, key, &build)?;
    let train_pos = project_all(train, &sk, plan.execution)?;
    let test_pos = project_all(test, &sk, plan.execution)?;
    let y = train.responses().expect("responses checked");
    let means = ComponentMeans::new(&sk, &train_pos, y)?;
    let table = knot_paths(&sk);
    Ok(FoldSkeleton { sk, table, train_pos, test_pos, means, dists: None })
}

fn sse(pred: impl Iterator<Item = f64>, y: &[f64]) -> f64 {
    pred.zip(y).map(|(p, t)| (p - t) * (p - t)).sum()
}

/// Held-out SSE of each method in `plan` on one train/test split.
pub fn split_sse(train: &PointCloud, test: &PointCloud, plan: &CvPlan) -> Result<Vec<f64>> {
    let ytr = train.responses().ok_or_else(|| SkelError::Shape("training data needs responses".into()))?;
    let yte = test.responses().ok_or_else(|| SkelError::Shape("test data needs responses".into()))?;
    let mut skeletons: BTreeMap<SkeletonKey, FoldSkeleton> = BTreeMap::new();
    let mut eucl: Option<Vec<Vec<usize>>> = None;
    let mut out = Vec::with_capacity(plan.methods.len());
    for m in &plan.methods {
        if let Some(key) = m.skeleton_key() {
            if !skeletons.contains_key(&key) {
                skeletons.insert(key, prepare(train, test, key, plan)?);
            }
            let fs = skeletons.get_mut(&key).expect("inserted above");
            if matches!(m, MethodSpec::SKernel { .. } | MethodSpec::SKnn { .. }) && fs.dists.is_none() {
                fs.dists = Some(pairwise_distances(&fs.train_pos, &fs.test_pos, &fs.sk, &fs.table, true, plan.execution));
            }
        }
        let err = match *m {
            MethodSpec::SKernel { skeleton, family, bandwidth } => {
                let fs = &skeletons[&skeleton];
                let h = bandwidth * r_hns(&fs.sk)?;
                let dists = fs.dists.as_ref().expect("computed above");
                let pred = dists.iter().zip(&fs.test_pos).map(|(row, q)| match kernel_predict(ytr, row, family, h) {
                    Ok(v) => Ok(v),
                    Err(SkelError::NoSupport(_)) => Ok(fs.means.for_position(&fs.sk, q)),
                    Err(e) => Err(e),
                });
                let pred: Vec<f64> = pred.collect::<Result<_>>()?;
                sse(pred.into_iter(), yte)
            }
            MethodSpec::SKnn { skeleton, k } => {
                let fs = &skeletons[&skeleton];
                let dists = fs.dists.as_ref().expect("computed above");
                let pred = dists.iter().zip(&fs.test_pos).map(|(row, q)| match knn_predict(ytr, row, k) {
                    Ok(v) => Ok(v.value),
                    Err(SkelError::NoSupport(_)) => Ok(fs.means.for_position(&fs.sk, q)),
                    Err(e) => Err(e),
                });
                let pred: Vec<f64> = pred.collect::<Result<_>>()?;
                sse(pred.into_iter(), yte)
            }
            MethodSpec::SLspline { skeleton, penalty } => {
                let fs = &skeletons[&skeleton];
                let z = spline_transform(&fs.train_pos, &fs.sk);
                let ops = match penalty {
                    Penalty::None => None,
                    Penalty::LapSmooth { order, .. } | Penalty::TrendFilter { order, .. } => {
                        Some(graph_operators(&fs.sk, order))
                    }
                };
                let fit = penalized_spline_fit(&z, ytr, ops.as_ref(), penalty)?;
                let pred = fs.test_pos.iter().map(|q| {
                    let (a, b) = fs.sk.position_knots(q);
                    let supported = |c: usize| fit.unsupported.binary_search(&c).is_err();
                    if supported(a) || b.is_some_and(supported) {
                        spline_predict(q, &fit.beta, &fs.sk)
                    } else {
                        fs.means.for_position(&fs.sk, q)
                    }
                });
                sse(pred, yte)
            }
            MethodSpec::Knn { k } => {
                if k == 0 || k > train.n() {
                    return Err(SkelError::Config(format!("k = {k} with {} training points", train.n())));
                }
                let order = eucl.get_or_insert_with(|| {
                    par::map_range(plan.execution, test.n(), |q| euclidean_order(train.points(), test.point(q)))
                });
                let pred = order.iter().map(|o| o[..k].iter().map(|&i| ytr[i]).sum::<f64>() / k as f64);
                sse(pred, yte)
            }
            MethodSpec::Ridge { lambda } => {
                let model = ridge_baseline(train.points(), ytr, lambda)?;
                sse((0..test.n()).map(|q| model.predict(test.point(q))), yte)
            }
            MethodSpec::Lasso { lambda } => {
                let model = lasso_baseline(train.points(), ytr, lambda)?;
                sse((0..test.n()).map(|q| model.predict(test.point(q))), yte)
            }
            MethodSpec::Mean => {
                let mean = ytr.iter().sum::<f64>() / ytr.len() as f64;
                sse(std::iter::repeat(mean), yte)
            }
        };
        out.push(err);
    }
    Ok(out)
}

/// Total k-fold SSE of every method in `plan`, in plan order. All methods
/// share the same folds.
pub fn cv_all(data: &PointCloud, plan: &CvPlan) -> Result<Vec<f64>> {
    plan.validate(data.n())?;
    if data.responses().is_none() {
        return Err(SkelError::Shape("cross-validation needs responses".into()));
    }
    let fold = kfold_split(data.n(), plan.n_folds, plan.seed)?;
    let per_fold = par::try_map_range(plan.execution, plan.n_folds, |f| {
        let train: Vec<usize> = (0..data.n()).filter(|&i| fold[i] != f).collect();
        let test: Vec<usize> = (0..data.n()).filter(|&i| fold[i] == f).collect();
        split_sse(&data.subset(&train), &data.subset(&test), plan)
    })?;
    let mut total = vec![0.0; plan.methods.len()];
    for f in &per_fold {
        for (t, v) in total.iter_mut().zip(f) {
            *t += v;
        }
    }
    Ok(total)
}

pub fn cv_sse(method: &MethodSpec, data: &PointCloud, plan: &CvPlan) -> Result<f64> {
    let single = CvPlan { methods: vec![*method], ..plan.clone() };
    Ok(cv_all(data, &single)?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub p5: f64,
    pub p95: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        Self { median: percentile(values, 0.5), p5: percentile(values, 0.05), p95: percentile(values, 0.95) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub spec: MethodSpec,
    /// SSE per replicate.
    pub sse: Vec<f64>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub results: Vec<MethodResult>,
}

impl ExperimentReport {
    pub fn from_sse(methods: &[MethodSpec], per_replicate: &[Vec<f64>]) -> Self {
        let results = methods
            .iter()
            .enumerate()
            .map(|(m, spec)| {
                let sse: Vec<f64> = per_replicate.iter().map(|r| r[m]).collect();
                MethodResult { spec: *spec, summary: Summary::of(&sse), sse }
            })
            .collect();
        Self { results }
    }

    /// Best entry per method: minimal median, ties to the smaller parameters.
    pub fn best(&self) -> BTreeMap<&'static str, &MethodResult> {
        let mut best: BTreeMap<&'static str, &MethodResult> = BTreeMap::new();
        for r in &self.results {
            let name = r.spec.name();
            let better = match best.get(name) {
                None => true,
                Some(cur) => match r.summary.median.total_cmp(&cur.summary.median) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => {
                        let a: Vec<f64> = r.spec.params().iter().map(|p| p.1).collect();
                        let b: Vec<f64> = cur.spec.params().iter().map(|p| p.1).collect();
                        a.partial_cmp(&b) == Some(std::cmp::Ordering::Less)
                    }
                },
            };
            if better {
                best.insert(name, r);
            }
        }
        best
    }

    pub fn best_median(&self, method: &str) -> Option<f64> {
        self.best().get(method).map(|r| r.summary.median)
    }

    /// `{method: {param: {median, p5, p95}}, best: {method: {...}}}` with
    /// sorted keys.
    pub fn to_json(&self) -> Result<String> {
        let mut top: BTreeMap<String, serde_json::Value> = BTreeMap::new();
        for r in &self.results {
            let entry = top.entry(r.spec.name().to_string()).or_insert_with(|| serde_json::json!({}));
            entry[r.spec.label()] = serde_json::to_value(r.summary)?;
        }
        let best: BTreeMap<&str, serde_json::Value> = self
            .best()
            .into_iter()
            .map(|(name, r)| {
                let v = serde_json::json!({
                    "param": r.spec.label(),
                    "median": r.summary.median,
                    "p5": r.summary.p5,
                    "p95": r.summary.p95,
                });
                (name, v)
            })
            .collect();
        top.insert("best".into(), serde_json::to_value(best)?);
        Ok(serde_json::to_string_pretty(&top)? + "\n")
    }

    /// Long-format rows `method,param_name,param_value,replicate,sse`; multiple
    /// parameters are joined with `;`.
    pub fn plot_csv(&self) -> String {
        let mut s = String::from("method,param_name,param_value,replicate,sse\n");
        for r in &self.results {
            let p = r.spec.params();
            let names: Vec<&str> = p.iter().map(|x| x.0).collect();
            let values: Vec<String> = p.iter().map(|x| x.1.to_string()).collect();
            for (rep, v) in r.sse.iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{},{}", r.spec.name(), names.join(";"), values.join(";"), rep, v);
            }
        }
        s
    }
}

/// Replicate `r` regenerates data, folds and skeletons from seed `seed + r`.
pub fn run_experiment(gen: &GenSpec, plan: &CvPlan, n_replicates: usize) -> Result<ExperimentReport> {
    if n_replicates == 0 {
        return Err(SkelError::Config("need at least one replicate".into()));
    }
    let per_rep = par::try_map_range(plan.execution, n_replicates, |r| {
        let seed = gen.seed.wrapping_add(r as u64);
        let data = generate(&GenSpec { seed, ..gen.clone() })?;
        let mut rep_plan = plan.clone();
        rep_plan.seed = plan.seed.wrapping_add(r as u64);
        rep_plan.build.seed = plan.build.seed.wrapping_add(r as u64);
        cv_all(&data.cloud, &rep_plan).map_err(|e| match e {
            SkelError::Config(m) => SkelError::Config(format!("replicate {r}: {m}")),
            SkelError::Degenerate(m) => SkelError::Degenerate(format!("replicate {r}: {m}")),
            other => other,
        })
    })?;
    Ok(ExperimentReport::from_sse(&plan.methods, &per_rep))
}

/// Flat key-value experiment description, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: Dataset,
    /// Total sample size; default proportions of the dataset are kept.
    pub n: Option<usize>,
    pub ambient_dim: usize,
    pub replicates: usize,
    pub seed: u64,
    pub folds: usize,
    pub restarts: usize,
    pub linkage: Linkage,
    pub methods: Vec<String>,
    pub knots: Vec<usize>,
    pub components: Vec<usize>,
    pub kernel: KernelFamily,
    pub bandwidths: Vec<f64>,
    pub sknn_k: Vec<usize>,
    pub knn_k: Vec<usize>,
    pub ridge_lambda: Vec<f64>,
    pub lasso_lambda: Vec<f64>,
    pub penalty_orders: Vec<usize>,
    pub penalty_lambda: Vec<f64>,
    pub sequential: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: Dataset::Yinyang,
            n: None,
            ambient_dim: 2,
            replicates: 1,
            seed: 0,
            folds: 5,
            restarts: 10,
            linkage: Linkage::Single,
            methods: vec!["skernel".into(), "sknn".into(), "slspline".into(), "knn".into()],
            knots: vec![],
            components: vec![1],
            kernel: KernelFamily::Gaussian,
            bandwidths: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            sknn_k: vec![5, 10, 20],
            knn_k: vec![5, 10, 20],
            ridge_lambda: vec![0.01, 0.1, 1.0, 10.0],
            lasso_lambda: vec![0.01, 0.1, 1.0, 10.0],
            penalty_orders: vec![0, 1, 2],
            penalty_lambda: vec![0.001, 0.01, 0.1],
            sequential: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| SkelError::Config(e.to_string()))
    }

    pub fn gen_spec(&self) -> GenSpec {
        let spec = GenSpec::new(self.dataset, self.ambient_dim, self.seed);
        match self.n {
            Some(n) => spec.with_total(n),
            None => spec,
        }
    }

    pub fn plan(&self) -> Result<CvPlan> {
        let n = self.gen_spec().total();
        let n_train = n - n.div_ceil(self.folds.max(1));
        let knots = if self.knots.is_empty() {
            vec![((n_train as f64).sqrt().round() as usize).max(1)]
        } else {
            self.knots.clone()
        };
        let keys: Vec<SkeletonKey> = knots
            .iter()
            .flat_map(|&k| self.components.iter().map(move |&c| SkeletonKey { knots: k, components: c }))
            .collect();
        let mut methods = Vec::new();
        for name in &self.methods {
            match name.as_str() {
                "skernel" => {
                    for &skeleton in &keys {
                        for &bandwidth in &self.bandwidths {
                            methods.push(MethodSpec::SKernel { skeleton, family: self.kernel, bandwidth });
                        }
                    }
                }
                "sknn" => {
                    for &skeleton in &keys {
                        for &k in &self.sknn_k {
                            methods.push(MethodSpec::SKnn { skeleton, k });
                        }
                    }
                }
                "slspline" => {
                    for &skeleton in &keys {
                        methods.push(MethodSpec::SLspline { skeleton, penalty: Penalty::None });
                    }
                }
                "slspline_lapsmooth" | "slspline_trendfilter" => {
                    let kind = name.trim_start_matches("slspline_");
                    for &skeleton in &keys {
                        for &order in &self.penalty_orders {
                            for &lambda in &self.penalty_lambda {
                                let penalty = Penalty::parse(kind, order, lambda)?;
                                methods.push(MethodSpec::SLspline { skeleton, penalty });
                            }
                        }
                    }
                }
                "knn" => methods.extend(self.knn_k.iter().map(|&k| MethodSpec::Knn { k })),
                "ridge" => methods.extend(self.ridge_lambda.iter().map(|&lambda| MethodSpec::Ridge { lambda })),
                "lasso" => methods.extend(self.lasso_lambda.iter().map(|&lambda| MethodSpec::Lasso { lambda })),
                "mean" => methods.push(MethodSpec::Mean),
                other => return Err(SkelError::Config(format!("unknown method '{other}'"))),
            }
        }
        let execution = if self.sequential { Execution::Sequential } else { Execution::Parallel };
        let build = BuildConfig { restarts: self.restarts, linkage: self.linkage, seed: self.seed, execution, ..Default::default() };
        let plan = CvPlan { n_folds: self.folds, seed: self.seed, build, methods, execution };
        plan.validate(n)?;
        if self.replicates == 0 {
            return Err(SkelError::Config("replicates must be at least 1".into()));
        }
        Ok(plan)
    }

    pub fn run(&self) -> Result<ExperimentReport> {
        run_experiment(&self.gen_spec(), &self.plan()?, self.replicates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cloud(n: usize, d: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y = rows.iter().map(|r| r[0] * 2.0 + rng.random::<f64>()).collect();
        PointCloud::new(RowMatrix::from_rows(&rows).unwrap(), Some(y)).unwrap()
    }

    fn plan(methods: Vec<MethodSpec>) -> CvPlan {
        CvPlan {
            n_folds: 5,
            seed: 3,
            build: BuildConfig { restarts: 3, ..Default::default() },
            methods,
            execution: Execution::Parallel,
        }
    }

    #[test]
    fn fold_sizes() {
        let f = kfold_split(10, 5, 1).unwrap();
        for k in 0..5 {
            assert_eq!(f.iter().filter(|&&x| x == k).count(), 2);
        }
        let f = kfold_split(11, 5, 1).unwrap();
        let mut sizes: Vec<usize> = (0..5).map(|k| f.iter().filter(|&&x| x == k).count()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
        assert!(kfold_split(3, 5, 0).is_err());
    }

    #[test]
    fn mean_method_closed_form() {
        let data = cloud(37, 2, 1);
        let p = plan(vec![MethodSpec::Mean]);
        let got = cv_sse(&MethodSpec::Mean, &data, &p).unwrap();
        let fold = kfold_split(37, 5, 3).unwrap();
        let y = data.responses().unwrap();
        let mut want = 0.0;
        for f in 0..5 {
            let tr: Vec<f64> = (0..37).filter(|&i| fold[i] != f).map(|i| y[i]).collect();
            let m = tr.iter().sum::<f64>() / tr.len() as f64;
            want += (0..37).filter(|&i| fold[i] == f).map(|i| (y[i] - m).powi(2)).sum::<f64>();
        }
        assert!((got - want).abs() < 1e-10 * want);
    }

    #[test]
    fn euclidean_knn_against_sort() {
        let data = cloud(30, 3, 2);
        let y = data.responses().unwrap();
        let q = [0.1, -0.2, 0.3];
        assert!((euclidean_knn(data.points(), y, &q, 30).unwrap() - y.iter().sum::<f64>() / 30.0).abs() < 1e-14);
        let mut d: Vec<(f64, usize)> = (0..30).map(|i| (sq_dist(data.point(i), &q), i)).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(euclidean_knn(data.points(), y, &q, 1).unwrap(), y[d[0].1]);
        let want: f64 = d[..7].iter().map(|p| y[p.1]).sum::<f64>() / 7.0;
        assert!((euclidean_knn(data.points(), y, &q, 7).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn ridge_and_lasso_limits() {
        let data = cloud(40, 3, 3);
        let y = data.responses().unwrap();
        let ols = ridge_baseline(data.points(), y, 0.0).unwrap();
        let tiny = ridge_baseline(data.points(), y, 1e-12).unwrap();
        for (a, b) in ols.coef.iter().zip(&tiny.coef) {
            assert!((a - b).abs() < 1e-9);
        }
        let huge = ridge_baseline(data.points(), y, 1e12).unwrap();
        assert!(huge.coef.iter().all(|c| c.abs() < 1e-9));
        let (xc, yc, _, _) = centered(data.points(), y);
        let thresh = (xc.transpose() * yc).amax();
        let zero = lasso_baseline(data.points(), y, thresh * 1.01).unwrap();
        assert!(zero.coef.iter().all(|&c| c == 0.0));
        let some = lasso_baseline(data.points(), y, thresh * 0.5).unwrap();
        assert!(some.coef.iter().any(|&c| c != 0.0));
    }

    #[test]
    fn percentile_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..30 {
            let v: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let mut s = v.clone();
            s.sort_by(f64::total_cmp);
            for p in [0.0, 0.05, 0.5, 0.95, 1.0] {
                let h = (n - 1) as f64 * p;
                let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
                let want = s[lo] + (h - lo as f64) * (s[hi] - s[lo]);
                assert!((percentile(&v, p) - want).abs() < 1e-15);
            }
            assert_eq!(percentile(&v, 0.0), s[0]);
            assert_eq!(percentile(&v, 1.0), s[n - 1]);
        }
    }

    #[test]
    fn skeleton_methods_run_and_repeat() {
        let data = cloud(120, 2, 4);
        let key = SkeletonKey { knots: 8, components: 1 };
        let methods = vec![
            MethodSpec::SKernel { skeleton: key, family: KernelFamily::Gaussian, bandwidth: 2.0 },
            MethodSpec::SKnn { skeleton: key, k: 5 },
            MethodSpec::SLspline { skeleton: key, penalty: Penalty::None },
            MethodSpec::SLspline { skeleton: key, penalty: Penalty::LapSmooth { order: 1, lambda: 0.1 } },
            MethodSpec::Knn { k: 5 },
        ];
        let p = plan(methods);
        let a = cv_all(&data, &p).unwrap();
        let b = cv_all(&data, &CvPlan { execution: Execution::Sequential, ..p.clone() }).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| v.is_finite() && *v >= 0.0));
        // each entry equals the single-method run on the same folds
        for (m, v) in p.methods.iter().zip(&a) {
            assert_eq!(cv_sse(m, &data, &p).unwrap(), *v);
        }
    }

    #[test]
    fn fold_skeleton_ignores_test_rows() {
        let data = cloud(60, 2, 6);
        let fold = kfold_split(60, 5, 1).unwrap();
        let train: Vec<usize> = (0..60).filter(|&i| fold[i] != 0).collect();
        let key = SkeletonKey { knots: 6, components: 1 };
        let cfg = BuildConfig { restarts: 2, ..Default::default() };
        let a = fold_skeleton(&data.subset(&train), key, &cfg).unwrap();
        let mut rows = data.points().to_rows();
        for i in (0..60).filter(|&i| fold[i] == 0) {
            rows[i] = vec![100.0, -100.0];
        }
        let moved = PointCloud::new(RowMatrix::from_rows(&rows).unwrap(), None).unwrap();
        let b = fold_skeleton(&moved.subset(&train), key, &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn report_summary_and_best() {
        let methods = vec![MethodSpec::Knn { k: 10 }, MethodSpec::Knn { k: 5 }, MethodSpec::Mean];
        let report = ExperimentReport::from_sse(&methods, &[vec![2.0, 2.0, 7.0]]);
        assert_eq!(report.results[2].summary, Summary { median: 7.0, p5: 7.0, p95: 7.0 });
        // equal medians: the smaller k wins
        assert_eq!(report.best()["knn"].spec, MethodSpec::Knn { k: 5 });
        let json = report.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["knn"]["k=5"]["median"], 2.0);
        assert_eq!(v["best"]["knn"]["param"], "k=5");
        assert!(report.plot_csv().starts_with("method,param_name,param_value,replicate,sse\nknn,k,10,0,2\n"));
    }

    #[test]
    fn constant_sse_across_replicates() {
        let report = ExperimentReport::from_sse(&[MethodSpec::Mean], &[vec![4.0], vec![4.0], vec![4.0]]);
        assert_eq!(report.results[0].summary, Summary { median: 4.0, p5: 4.0, p95: 4.0 });
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::from_toml(
            "dataset = \"swissroll\"\nn = 100\nambient_dim = 4\nmethods = [\"knn\", \"slspline_trendfilter\"]\nknots = [6]\npenalty_orders = [1]\npenalty_lambda = [0.1, 1.0]\n",
        )
        .unwrap();
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.methods.len(), 3 + 2);
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
    }
}
