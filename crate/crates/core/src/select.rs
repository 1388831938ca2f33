//! Dimension ranking, hard masks and soft-mask scales.

use crate::data::LabeledFeatureSet;
use crate::error::{Error, Result};
use crate::stats::{ClassStats, ImportanceVector};

/// Dimensions sorted by descending importance; ties keep the lower index first.
pub fn rank_dimensions(omega: &ImportanceVector) -> Vec<usize> {
    let mut order: Vec<usize> = (0..omega.dim()).collect();
    order.sort_by(|&a, &b| omega.values[b].total_cmp(&omega.values[a]));
    order
}

/// Keep the first `keep_count` dimensions of `ranking`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSpec {
    keep_count: usize,
    ranking: Vec<usize>,
}

impl MaskSpec {
    pub fn new(keep_count: usize, ranking: Vec<usize>) -> Result<Self> {
        let dim = ranking.len();
        let mut seen = vec![false; dim];
        for &k in &ranking {
            if k >= dim || std::mem::replace(&mut seen[k], true) {
                return Err(Error::Validation("ranking is not a permutation".into()));
            }
        }
        if keep_count == 0 || keep_count > dim {
            return Err(Error::Precondition(format!(
                "keep count {keep_count} outside [1, {dim}]"
            )));
        }
        Ok(Self { keep_count, ranking })
    }

    pub fn keep_count(&self) -> usize {
        self.keep_count
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    /// 1.0 on kept dimensions, 0.0 elsewhere.
    pub fn indicator(&self) -> Vec<f64> {
        let mut ind = vec![0.0; self.ranking.len()];
        for &k in &self.ranking[..self.keep_count] {
            ind[k] = 1.0;
        }
        ind
    }
}

/// Zeroes every dimension outside the top `keep_count` of the ranking.
pub fn hard_mask(data: &LabeledFeatureSet, mask: &MaskSpec) -> Result<LabeledFeatureSet> {
    if mask.ranking.len() != data.dim() {
        return Err(Error::DimMismatch {
            expected: data.dim(),
            found: mask.ranking.len(),
        });
    }
    scale_columns(data, &mask.indicator())
}

/// Per-dimension multipliers for the soft mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleVector {
    pub values: Vec<f64>,
    pub norm_preserving: bool,
    /// Set when every importance was zero and identity scales were returned.
    pub degenerate: bool,
}

impl ScaleVector {
    pub fn identity(dim: usize) -> Self {
        Self {
            values: vec![1.0; dim],
            norm_preserving: false,
            degenerate: false,
        }
    }
}

/// Scales `s_k = c * omega_k / (|mu_k| + eps)`, with `mu_k` the overall mean.
///
/// `c` makes the mean squared row norm of the scaled `train` rows equal to
/// that of the unscaled rows. Dimensions with zero importance get a zero
/// scale.
pub fn soft_mask_scales(
    omega: &ImportanceVector,
    stats: &ClassStats,
    eps: f64,
    train: &LabeledFeatureSet,
) -> Result<ScaleVector> {
    let dim = omega.dim();
    if stats.dim() != dim {
        return Err(Error::DimMismatch {
            expected: dim,
            found: stats.dim(),
        });
    }
    if train.dim() != dim {
        return Err(Error::DimMismatch {
            expected: dim,
            found: train.dim(),
        });
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Precondition(format!("epsilon must be finite and >= 0, got {eps}")));
    }
    if omega.values.iter().all(|&w| w == 0.0) {
        return Ok(ScaleVector {
            degenerate: true,
            ..ScaleVector::identity(dim)
        });
    }
    let mut raw = Vec::with_capacity(dim);
    for (k, (&w, &mu)) in omega.values.iter().zip(stats.overall_means()).enumerate() {
        let s = if w == 0.0 { 0.0 } else { w / (mu.abs() + eps) };
        if !s.is_finite() {
            return Err(Error::Precondition(format!(
                "scale of dimension {k} is not finite (zero mean with epsilon {eps})"
            )));
        }
        raw.push(s);
    }

    let mut before = 0.0;
    let mut after = 0.0;
    for row in train.rows() {
        for (x, s) in row.iter().zip(&raw) {
            before += x * x;
            after += (s * x) * (s * x);
        }
    }
    let c = if before > 0.0 && after > 0.0 {
        (before / after).sqrt()
    } else {
        1.0
    };
    let values: Vec<f64> = raw.iter().map(|s| s * c).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("soft-mask scales overflowed".into()));
    }
    Ok(ScaleVector {
        values,
        norm_preserving: true,
        degenerate: false,
    })
}

/// Multiplies column `k` by `s_k`.
pub fn apply_scales(data: &LabeledFeatureSet, scales: &ScaleVector) -> Result<LabeledFeatureSet> {
    scale_columns(data, &scales.values)
}

pub(crate) fn scale_columns(data: &LabeledFeatureSet, s: &[f64]) -> Result<LabeledFeatureSet> {
    if s.len() != data.dim() {
        return Err(Error::DimMismatch {
            expected: data.dim(),
            found: s.len(),
        });
    }
    let mut out = data.features().to_vec();
    for row in out.chunks_exact_mut(s.len()) {
        for (x, f) in row.iter_mut().zip(s) {
            *x *= f;
        }
    }
    data.with_features(out)
}
