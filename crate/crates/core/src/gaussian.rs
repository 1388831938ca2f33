//! Two-class diagonal Gaussian bench.
//!
//! Class `a` is `N(mean_a, diag(std^2))` and class `b` is
//! `N(mean_b, diag(std^2))`. Linear rules are scored in closed form, so no
//! test points need to be sampled.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::classify::{fit_erm01_1d, fit_erm01_2d, LinearClassifier};
use crate::data::{derive_task_seed, rng_from_seed, Episode, LabeledFeatureSet, SeedSpec};
use crate::error::{Error, Result};
use crate::runner::map_tasks;
use crate::stats::{normal_cdf, ImportanceVector, Provenance};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTaskSpec {
    mean_a: Vec<f64>,
    mean_b: Vec<f64>,
    std: Vec<f64>,
}

/// Names accepted by [`GaussianTaskSpec::preset`].
pub const PRESETS: &[&str] = &["two-dim", "thm1", "redundant-512", "soft-mask-64", "fi-bench"];

impl GaussianTaskSpec {
    pub fn new(mean_a: Vec<f64>, mean_b: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        let dim = std.len();
        if dim == 0 {
            return Err(Error::Validation("spec needs at least one dimension".into()));
        }
        if mean_a.len() != dim || mean_b.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: if mean_a.len() != dim { mean_a.len() } else { mean_b.len() },
            });
        }
        if let Some(k) = std.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::Validation(format!("std of dimension {k} must be finite and positive")));
        }
        if mean_a.iter().chain(&mean_b).any(|m| !m.is_finite()) {
            return Err(Error::Validation("means must be finite".into()));
        }
        Ok(Self { mean_a, mean_b, std })
    }

    /// The two-dimensional model: means (-1, -10) and (1, 10), stds (0.6, 10).
    pub fn two_dim() -> Self {
        Self::new(vec![-1.0, -10.0], vec![1.0, 10.0], vec![0.6, 10.0]).unwrap()
    }

    /// Distance-to-std ratios 1.5 and 0.3 on the two-dim stds.
    pub fn thm1() -> Self {
        Self::new(vec![-0.45, -1.5], vec![0.45, 1.5], vec![0.6, 10.0]).unwrap()
    }

    /// 512 dimensions: two with importance 1.5, the rest 0.1. Ten of the weak
    /// dimensions have a large spread.
    pub fn redundant_512() -> Self {
        let mut ma = Vec::with_capacity(512);
        let mut mb = Vec::with_capacity(512);
        let mut sd = Vec::with_capacity(512);
        for k in 0..512 {
            let (m, s) = match k {
                0..=1 => (1.5, 1.0),
                2..=11 => (3.0, 30.0),
                _ => (0.1, 1.0),
            };
            ma.push(-m);
            mb.push(m);
            sd.push(s);
        }
        Self::new(ma, mb, sd).unwrap()
    }

    /// 64 dimensions with mean offset `2 std`: four with importance 1.5 and
    /// std 1, sixty with importance 0.1 and std 3.
    pub fn soft_mask_64() -> Self {
        let mut ma = Vec::with_capacity(64);
        let mut mb = Vec::with_capacity(64);
        let mut sd = Vec::with_capacity(64);
        for k in 0..64 {
            let (w, s) = if k < 4 { (1.5, 1.0) } else { (0.1, 3.0) };
            ma.push(2.0 * s - w * s);
            mb.push(2.0 * s + w * s);
            sd.push(s);
        }
        Self::new(ma, mb, sd).unwrap()
    }

    /// 16 centred dimensions, std 5, importance evenly spaced from 0.1 to 2.
    pub fn fi_bench() -> Self {
        let w: Vec<f64> = (0..16).map(|k| 0.1 + 1.9 * k as f64 / 15.0).collect();
        let ma = w.iter().map(|w| -w * 5.0).collect();
        let mb = w.iter().map(|w| w * 5.0).collect();
        Self::new(ma, mb, vec![5.0; 16]).unwrap()
    }

    pub fn preset(name: &str) -> Option<Self> {
        Some(match name {
            "two-dim" => Self::two_dim(),
            "thm1" => Self::thm1(),
            "redundant-512" => Self::redundant_512(),
            "soft-mask-64" => Self::soft_mask_64(),
            "fi-bench" => Self::fi_bench(),
            _ => return None,
        })
    }

    pub fn dim(&self) -> usize {
        self.std.len()
    }

    pub fn mean_a(&self) -> &[f64] {
        &self.mean_a
    }

    pub fn mean_b(&self) -> &[f64] {
        &self.mean_b
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// Population importance `|mu_a - mu_b| / (2 std)`.
    pub fn oracle_importance(&self) -> ImportanceVector {
        let values = (0..self.dim())
            .map(|k| (self.mean_a[k] - self.mean_b[k]).abs() / (2.0 * self.std[k]))
            .collect();
        ImportanceVector::new(values, Provenance::Oracle).expect("finite spec")
    }

    /// Half the distance between the class means, per dimension.
    pub fn half_gaps(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| 0.5 * (self.mean_b[k] - self.mean_a[k]).abs())
            .collect()
    }

    /// The spec restricted to the listed dimensions, in that order.
    pub fn restrict(&self, dims: &[usize]) -> Result<Self> {
        check_dims(self.dim(), dims)?;
        Self::new(
            dims.iter().map(|&k| self.mean_a[k]).collect(),
            dims.iter().map(|&k| self.mean_b[k]).collect(),
            dims.iter().map(|&k| self.std[k]).collect(),
        )
    }
}

fn check_dims(dim: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::Precondition("at least one dimension must be used".into()));
    }
    if let Some(&k) = dims.iter().find(|&&k| k >= dim) {
        return Err(Error::Precondition(format!("dimension {k} out of range for dim {dim}")));
    }
    Ok(())
}

/// `shot` rows of class `a` followed by `shot` rows of class `b`.
pub(crate) fn sample_rows<R: Rng>(spec: &GaussianTaskSpec, shot: usize, rng: &mut R) -> LabeledFeatureSet {
    let dim = spec.dim();
    let mut feats = Vec::with_capacity(2 * shot * dim);
    let mut labels = Vec::with_capacity(2 * shot);
    for (label, mean) in [&spec.mean_a, &spec.mean_b].into_iter().enumerate() {
        for _ in 0..shot {
            for k in 0..dim {
                let e: f64 = rng.sample(StandardNormal);
                feats.push(mean[k] + spec.std[k] * e);
            }
            labels.push(label);
        }
    }
    LabeledFeatureSet::new(feats, dim, labels, 2, None).expect("finite Gaussian draws")
}

/// A binary episode drawn from the spec. Train rows are drawn before query
/// rows, so the train split depends only on `(spec, shot, seed)`.
pub fn sample_task(spec: &GaussianTaskSpec, shot: usize, query_per_class: usize, seed: u64) -> Result<Episode> {
    if shot == 0 || query_per_class == 0 {
        return Err(Error::Precondition("shot and query_per_class must both be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let train = sample_rows(spec, shot, &mut rng);
    let query = sample_rows(spec, query_per_class, &mut rng);
    Ok(Episode {
        way: 2,
        shot,
        train,
        query,
        task_id: seed,
        classes: vec![0, 1],
    })
}

/// Simulated augmentation: each view is `base + std * (bias + rho * e)`
/// with `e` standard normal per dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewConfig {
    pub views: usize,
    pub rho: f64,
    pub bias: f64,
}

impl Default for ViewConfig {
    fn default() -> Self {
        Self {
            views: 5,
            rho: 0.5,
            bias: 0.0,
        }
    }
}

pub(crate) fn add_views<R: Rng>(
    spec: &GaussianTaskSpec,
    train: &LabeledFeatureSet,
    cfg: &ViewConfig,
    rng: &mut R,
) -> Result<LabeledFeatureSet> {
    if cfg.views == 0 {
        return Err(Error::Precondition("views per sample must be at least 1".into()));
    }
    if !(cfg.rho >= 0.0) || !cfg.rho.is_finite() || !cfg.bias.is_finite() {
        return Err(Error::Precondition("view noise ratio must be finite and >= 0".into()));
    }
    if train.has_groups() {
        return Err(Error::Precondition("train split already carries views".into()));
    }
    if train.dim() != spec.dim() {
        return Err(Error::DimMismatch {
            expected: spec.dim(),
            found: train.dim(),
        });
    }
    let dim = spec.dim();
    let per = cfg.views + 1;
    let mut feats = Vec::with_capacity(train.n_samples() * per * dim);
    let mut labels = Vec::with_capacity(train.n_samples() * per);
    let mut groups = Vec::with_capacity(train.n_samples() * per);
    for (g, (row, &label)) in train.rows().zip(train.labels()).enumerate() {
        feats.extend_from_slice(row);
        labels.push(label);
        groups.push(g as u32);
        for _ in 0..cfg.views {
            for k in 0..dim {
                let e: f64 = rng.sample(StandardNormal);
                feats.push(row[k] + spec.std[k] * (cfg.bias + cfg.rho * e));
            }
            labels.push(label);
            groups.push(g as u32);
        }
    }
    LabeledFeatureSet::new(feats, dim, labels, train.n_classes(), Some(groups))
}

/// Adds `cfg.views` simulated views to every train row; the query split is
/// left as is.
pub fn simulate_views(spec: &GaussianTaskSpec, episode: &Episode, cfg: &ViewConfig, seed: u64) -> Result<Episode> {
    let mut rng = rng_from_seed(seed);
    let train = add_views(spec, &episode.train, cfg, &mut rng)?;
    Ok(Episode {
        train,
        ..episode.clone()
    })
}

/// Which class the test point comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestClass {
    A,
    B,
    /// Average of the two class errors.
    Balanced,
}

/// Exact error of the rule "predict `b` when `w . z + bias > 0`".
pub fn linear_error_closed_form(spec: &GaussianTaskSpec, w: &[f64], bias: f64, class: TestClass) -> Result<f64> {
    if w.len() != spec.dim() {
        return Err(Error::DimMismatch {
            expected: spec.dim(),
            found: w.len(),
        });
    }
    let s = w
        .iter()
        .zip(&spec.std)
        .map(|(w, s)| (w * s) * (w * s))
        .sum::<f64>()
        .sqrt();
    let score = |mean: &[f64]| w.iter().zip(mean).map(|(w, m)| w * m).sum::<f64>() + bias;
    let (err_a, err_b) = if s > 0.0 {
        (
            normal_cdf(score(&spec.mean_a) / s),
            normal_cdf(-score(&spec.mean_b) / s),
        )
    } else if bias > 0.0 {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    Ok(match class {
        TestClass::A => err_a,
        TestClass::B => err_b,
        TestClass::Balanced => 0.5 * (err_a + err_b),
    })
}

/// Exact error of a fitted binary classifier.
pub fn classifier_error_closed_form(spec: &GaussianTaskSpec, clf: &LinearClassifier, class: TestClass) -> Result<f64> {
    let (w, bias) = clf.binary_direction()?;
    linear_error_closed_form(spec, &w, bias, class)
}

/// Exact error of the nearest-centroid rule with centroids `pa`, `pb` that
/// only looks at `dims`. Ties go to class `a`.
pub fn ncc_test_error_closed_form(
    spec: &GaussianTaskSpec,
    pa: &[f64],
    pb: &[f64],
    dims: &[usize],
    class: TestClass,
) -> Result<f64> {
    check_dims(spec.dim(), dims)?;
    if pa.len() != spec.dim() || pb.len() != spec.dim() {
        return Err(Error::DimMismatch {
            expected: spec.dim(),
            found: pa.len().min(pb.len()),
        });
    }
    let mut w = vec![0.0; spec.dim()];
    let mut bias = 0.0;
    for &k in dims {
        w[k] = 2.0 * (pb[k] - pa[k]);
        bias += pa[k] * pa[k] - pb[k] * pb[k];
    }
    linear_error_closed_form(spec, &w, bias, class)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesOptimal {
    pub error: f64,
    /// Weight ratio of the second to the first dimension of the optimal
    /// direction, for two dimensions with an informative first one.
    pub alpha: Option<f64>,
}

/// Error of the best linear rule using `dims`: `1 - Phi(sqrt(sum h^2 / s^2))`
/// with `h` half the class-mean gap.
pub fn bayes_optimal_error(spec: &GaussianTaskSpec, dims: &[usize]) -> Result<BayesOptimal> {
    check_dims(spec.dim(), dims)?;
    let h = spec.half_gaps();
    let snr = dims.iter().map(|&k| (h[k] / spec.std[k]).powi(2)).sum::<f64>().sqrt();
    let alpha = match dims {
        &[i, j] if h[i] > 0.0 => Some(h[j] * spec.std[i].powi(2) / (h[i] * spec.std[j].powi(2))),
        _ => None,
    };
    Ok(BayesOptimal {
        error: normal_cdf(-snr),
        alpha,
    })
}

/// Probability that, with `n` shots per class, every sample centroid of
/// class `b` exceeds that of class `a` along each dimension's mean gap.
pub fn centroid_order_prob(spec: &GaussianTaskSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("shots must be at least 1".into()));
    }
    let root = (2.0 * n as f64).sqrt();
    Ok(spec
        .half_gaps()
        .iter()
        .zip(&spec.std)
        .map(|(h, s)| normal_cdf(root * h / s))
        .product())
}

/// Conditions, bounds and Monte Carlo results of the redundancy theorems.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TheoremReport {
    pub shots: usize,
    pub conditions_hold: Vec<bool>,
    /// Left side minus right side of each condition.
    pub margins: Vec<f64>,
    pub guarantee_probability: Option<f64>,
    /// Fraction of draws with `L(z1, z2) > L(z1)` on class-`a` test points.
    pub empirical_frequency: Option<f64>,
    /// Same event measured with the balanced error.
    pub balanced_frequency: Option<f64>,
    pub errors_1d: Vec<f64>,
    pub errors_2d: Vec<f64>,
    /// Per-draw `L(h2) - L(h1)`.
    pub gaps: Vec<f64>,
    pub median_gap: Option<f64>,
    pub bayes_component: Option<f64>,
}

fn require_2d(spec: &GaussianTaskSpec) -> Result<()> {
    if spec.dim() != 2 {
        return Err(Error::Precondition(format!("theorem checks need a 2-dim spec, got {}", spec.dim())));
    }
    Ok(())
}

/// Distance-to-std ratios `(r1, r2)` of a 2-dim spec.
fn ratios(spec: &GaussianTaskSpec) -> (f64, f64) {
    let h = spec.half_gaps();
    (2.0 * h[0] / spec.std[0], 2.0 * h[1] / spec.std[1])
}

/// Checks `r2 > 2.4 / sqrt(n)` and `r1 > 2 r2 + 5.4 / sqrt(n)` and evaluates
/// the product lower bound on the probability that the second dimension
/// hurts the nearest-centroid classifier.
pub fn theorem1_conditions(spec: &GaussianTaskSpec, n: usize) -> Result<TheoremReport> {
    require_2d(spec)?;
    if n == 0 {
        return Err(Error::Precondition("shots must be at least 1".into()));
    }
    let (r1, r2) = ratios(spec);
    let sn = (n as f64).sqrt();
    let margins = vec![r2 - 2.4 / sn, r1 - (2.0 * r2 + 5.4 / sn)];
    let root2n = (2.0 * n as f64).sqrt();
    let guarantee = normal_cdf(root2n * r1)
        * normal_cdf(root2n * r2)
        * normal_cdf((10.0 * n as f64).sqrt() / 5.0 * (r1 - 2.0 * r2));
    Ok(TheoremReport {
        shots: n,
        conditions_hold: margins.iter().map(|&m| m > 0.0).collect(),
        margins,
        guarantee_probability: Some(guarantee),
        ..TheoremReport::default()
    })
}

/// Monte Carlo check of the nearest-centroid redundancy theorem with exact
/// per-draw test errors.
pub fn theorem1_verify(spec: &GaussianTaskSpec, n: usize, n_draws: usize, seed: u64, workers: usize) -> Result<TheoremReport> {
    if n_draws < 100 {
        return Err(Error::Precondition(format!("at least 100 draws required, got {n_draws}")));
    }
    let mut report = theorem1_conditions(spec, n)?;
    let draws = map_tasks(n_draws, workers, |i| {
        let mut rng = rng_from_seed(derive_task_seed(SeedSpec {
            base_seed: seed,
            task_index: i,
        }));
        let train = sample_rows(spec, n, &mut rng);
        let (pa, pb) = centroids(&train);
        let mut out = [0.0; 4];
        for (j, class) in [TestClass::A, TestClass::Balanced].into_iter().enumerate() {
            out[2 * j] = ncc_test_error_closed_form(spec, &pa, &pb, &[0], class)?;
            out[2 * j + 1] = ncc_test_error_closed_form(spec, &pa, &pb, &[0, 1], class)?;
        }
        Ok(out)
    })?;
    let frac = |one: usize, two: usize| draws.iter().filter(|d| d[two] > d[one]).count() as f64 / n_draws as f64;
    report.empirical_frequency = Some(frac(0, 1));
    report.balanced_frequency = Some(frac(2, 3));
    report.errors_1d = draws.iter().map(|d| d[0]).collect();
    report.errors_2d = draws.iter().map(|d| d[1]).collect();
    Ok(report)
}

fn centroids(train: &LabeledFeatureSet) -> (Vec<f64>, Vec<f64>) {
    let dim = train.dim();
    let mut sums = [vec![0.0; dim], vec![0.0; dim]];
    let mut counts = [0usize; 2];
    for (row, &l) in train.rows().zip(train.labels()) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(row) {
            *s += v;
        }
    }
    let [mut a, mut b] = sums;
    a.iter_mut().for_each(|v| *v /= counts[0] as f64);
    b.iter_mut().for_each(|v| *v /= counts[1] as f64);
    (a, b)
}

/// `Phi(d1 / 2 s1) - Phi(sqrt(d1^2 / 4 s1^2 + d2^2 / 4 s2^2))`, the
/// population part of the linear-probing bound. Never positive.
pub fn bayes_gap_component(spec: &GaussianTaskSpec) -> Result<f64> {
    require_2d(spec)?;
    let h = spec.half_gaps();
    let (a, b) = (h[0] / spec.std[0], h[1] / spec.std[1]);
    Ok(normal_cdf(a) - normal_cdf((a * a + b * b).sqrt()))
}

/// Per-draw population-error gap between exact 0-1 minimisers on both
/// dimensions and on the first dimension alone.
pub fn theorem2_gap(spec: &GaussianTaskSpec, n: usize, n_draws: usize, seed: u64, workers: usize) -> Result<TheoremReport> {
    require_2d(spec)?;
    if n < 2 {
        return Err(Error::Precondition(format!("the ERM gap needs at least 2 shots, got {n}")));
    }
    if n_draws == 0 {
        return Err(Error::Precondition("at least one draw required".into()));
    }
    let first = spec.restrict(&[0])?;
    let draws = map_tasks(n_draws, workers, |i| {
        let mut rng = rng_from_seed(derive_task_seed(SeedSpec {
            base_seed: seed,
            task_index: i,
        }));
        let train = sample_rows(spec, n, &mut rng);
        let one: Vec<f64> = train.rows().map(|r| r[0]).collect();
        let train_1d = LabeledFeatureSet::new(one, 1, train.labels().to_vec(), 2, None)?;
        let h1 = fit_erm01_1d(&train_1d)?;
        let h2 = fit_erm01_2d(&train)?;
        let l1 = classifier_error_closed_form(&first, &h1.classifier, TestClass::Balanced)?;
        let l2 = classifier_error_closed_form(spec, &h2.classifier, TestClass::Balanced)?;
        Ok((l1, l2))
    })?;
    let gaps: Vec<f64> = draws.iter().map(|(a, b)| b - a).collect();
    Ok(TheoremReport {
        shots: n,
        errors_1d: draws.iter().map(|d| d.0).collect(),
        errors_2d: draws.iter().map(|d| d.1).collect(),
        median_gap: Some(median(&gaps)),
        gaps,
        bayes_component: Some(bayes_gap_component(spec)?),
        ..TheoremReport::default()
    })
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
