//! Class statistics, the standard normal CDF and feature importance.
//!
//! Importance of dimension `k` for a pair of classes is
//! `|mu_1k - mu_2k| / (sigma_1k + sigma_2k)`. For more than two classes it is
//! the unweighted mean over all class pairs.

use crate::data::LabeledFeatureSet;
use crate::error::{Error, Result};

/// Fixed per-dimension std used when a class has a single sample.
pub const DEFAULT_FIXED_STD: f64 = 1.0;

/// Importance assigned when both class stds are zero but the means differ.
pub const IMPORTANCE_CAP: f64 = 1e6;

/// How per-class standard deviations are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VariancePolicy {
    /// Unbiased sample std (n - 1 denominator); needs two samples per class.
    SampleStd,
    /// Every class std set to the given constant.
    Fixed(f64),
}

impl VariancePolicy {
    /// Fixed std when any class is a singleton, sample std otherwise.
    pub fn for_counts(counts: &[usize]) -> Self {
        if counts.iter().any(|&n| n < 2) {
            VariancePolicy::Fixed(DEFAULT_FIXED_STD)
        } else {
            VariancePolicy::SampleStd
        }
    }
}

/// Per-class, per-dimension means and stds.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    n_classes: usize,
    dim: usize,
    means: Vec<f64>,
    stds: Vec<f64>,
    overall: Vec<f64>,
    counts: Vec<usize>,
}

impl ClassStats {
    /// Builds stats from `n_classes x dim` row-major means and stds.
    pub fn from_parts(
        n_classes: usize,
        dim: usize,
        means: Vec<f64>,
        stds: Vec<f64>,
        counts: Vec<usize>,
    ) -> Result<Self> {
        if means.len() != n_classes * dim || stds.len() != n_classes * dim {
            return Err(Error::Validation("class stats buffers have the wrong shape".into()));
        }
        if counts.len() != n_classes {
            return Err(Error::Validation("one sample count per class expected".into()));
        }
        if stds.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Validation("class stds must be finite and non-negative".into()));
        }
        let mut overall = vec![0.0; dim];
        for c in 0..n_classes {
            for (k, o) in overall.iter_mut().enumerate() {
                *o += means[c * dim + k];
            }
        }
        overall.iter_mut().for_each(|o| *o /= n_classes as f64);
        Ok(Self {
            n_classes,
            dim,
            means,
            stds,
            overall,
            counts,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self, class: usize, k: usize) -> f64 {
        self.means[class * self.dim + k]
    }

    pub fn std(&self, class: usize, k: usize) -> f64 {
        self.stds[class * self.dim + k]
    }

    pub fn class_means(&self, class: usize) -> &[f64] {
        &self.means[class * self.dim..(class + 1) * self.dim]
    }

    /// Unweighted mean of the per-class means, per dimension.
    pub fn overall_means(&self) -> &[f64] {
        &self.overall
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Stats of the listed classes only, relabelled `0..classes.len()`.
    pub fn subset(&self, classes: &[usize]) -> Result<ClassStats> {
        if let Some(&c) = classes.iter().find(|&&c| c >= self.n_classes) {
            return Err(Error::Precondition(format!("class {c} out of range")));
        }
        let dim = self.dim;
        let pick = |v: &[f64]| -> Vec<f64> {
            classes
                .iter()
                .flat_map(|&c| v[c * dim..(c + 1) * dim].iter().copied())
                .collect()
        };
        ClassStats::from_parts(
            classes.len(),
            dim,
            pick(&self.means),
            pick(&self.stds),
            classes.iter().map(|&c| self.counts[c]).collect(),
        )
    }
}

/// Arithmetic class means and stds under `policy`. Views count as samples.
pub fn class_stats(data: &LabeledFeatureSet, policy: VariancePolicy) -> Result<ClassStats> {
    let (c_n, dim) = (data.n_classes(), data.dim());
    let counts = data.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Precondition(format!("class {c} has no samples")));
    }
    match policy {
        VariancePolicy::SampleStd => {
            if let Some(c) = counts.iter().position(|&n| n < 2) {
                return Err(Error::Precondition(format!(
                    "sample std needs at least 2 samples per class; class {c} has {}",
                    counts[c]
                )));
            }
        }
        VariancePolicy::Fixed(s) => {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::Precondition(format!("fixed std must be finite and >= 0, got {s}")));
            }
        }
    }

    let mut means = vec![0.0; c_n * dim];
    for (row, &label) in data.rows().zip(data.labels()) {
        for (m, v) in means[label * dim..(label + 1) * dim].iter_mut().zip(row) {
            *m += v;
        }
    }
    for c in 0..c_n {
        let n = counts[c] as f64;
        means[c * dim..(c + 1) * dim].iter_mut().for_each(|m| *m /= n);
    }

    let stds = match policy {
        VariancePolicy::Fixed(s) => vec![s; c_n * dim],
        VariancePolicy::SampleStd => {
            let mut ss = vec![0.0; c_n * dim];
            for (row, &label) in data.rows().zip(data.labels()) {
                let base = label * dim;
                for (k, v) in row.iter().enumerate() {
                    let d = v - means[base + k];
                    ss[base + k] += d * d;
                }
            }
            for c in 0..c_n {
                let denom = (counts[c] - 1) as f64;
                ss[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .for_each(|s| *s = (*s / denom).sqrt());
            }
            ss
        }
    };
    ClassStats::from_parts(c_n, dim, means, stds, counts)
}

/// Standard normal CDF, `0.5 * erfc(-x / sqrt(2))`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Where an importance vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Oracle,
    EstimatedRaw,
    EstimatedAugmented,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Oracle => "oracle",
            Provenance::EstimatedRaw => "estimated-raw",
            Provenance::EstimatedAugmented => "estimated-augmented",
        }
    }
}

/// Non-negative per-dimension importance.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    pub values: Vec<f64>,
    pub provenance: Provenance,
    /// Set when some entry hit [`IMPORTANCE_CAP`] because both stds were zero.
    pub capped: bool,
}

impl ImportanceVector {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation("importance must be finite and non-negative".into()));
        }
        Ok(Self {
            values,
            provenance,
            capped: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn pair_importance(mean_diff: f64, std_sum: f64) -> (f64, bool) {
    let num = mean_diff.abs();
    if num == 0.0 {
        (0.0, false)
    } else if std_sum > 0.0 {
        let w = num / std_sum;
        if w.is_finite() && w <= IMPORTANCE_CAP {
            (w, false)
        } else {
            (IMPORTANCE_CAP, true)
        }
    } else {
        (IMPORTANCE_CAP, true)
    }
}

/// Importance of every dimension for the class pair `(c1, c2)`.
pub fn importance_binary(
    stats: &ClassStats,
    c1: usize,
    c2: usize,
    provenance: Provenance,
) -> Result<ImportanceVector> {
    importance_over_classes(stats, &[c1, c2], provenance)
}

/// Mean pairwise importance over all pairs drawn from `classes`.
pub fn importance_over_classes(
    stats: &ClassStats,
    classes: &[usize],
    provenance: Provenance,
) -> Result<ImportanceVector> {
    if classes.len() < 2 {
        return Err(Error::Precondition("importance needs at least two classes".into()));
    }
    if let Some(&c) = classes.iter().find(|&&c| c >= stats.n_classes()) {
        return Err(Error::Precondition(format!("class {c} out of range")));
    }
    let dim = stats.dim();
    let mut values = vec![0.0; dim];
    let mut capped = false;
    let mut pairs = 0usize;
    for (i, &a) in classes.iter().enumerate() {
        for &b in &classes[i + 1..] {
            pairs += 1;
            for (k, v) in values.iter_mut().enumerate() {
                let (w, cap) = pair_importance(
                    stats.mean(a, k) - stats.mean(b, k),
                    stats.std(a, k) + stats.std(b, k),
                );
                *v += w;
                capped |= cap;
            }
        }
    }
    values.iter_mut().for_each(|v| *v /= pairs as f64);
    Ok(ImportanceVector {
        values,
        provenance,
        capped,
    })
}

/// Multi-class importance of a labelled set: mean over all class pairs.
pub fn importance_multiclass(
    data: &LabeledFeatureSet,
    policy: VariancePolicy,
) -> Result<ImportanceVector> {
    let stats = class_stats(data, policy)?;
    let classes: Vec<usize> = (0..data.n_classes()).collect();
    importance_over_classes(&stats, &classes, Provenance::Oracle)
}

/// Importance estimated from an episode's train split.
///
/// When the split carries view groups the views are pooled into their class,
/// and the result is marked as augmented.
pub fn importance_estimated(
    train: &LabeledFeatureSet,
    policy: VariancePolicy,
) -> Result<ImportanceVector> {
    let stats = class_stats(train, policy)?;
    let classes: Vec<usize> = (0..train.n_classes()).collect();
    let provenance = if train.has_groups() {
        Provenance::EstimatedAugmented
    } else {
        Provenance::EstimatedRaw
    };
    importance_over_classes(&stats, &classes, provenance)
}
