//! Linear classifiers: nearest centroid, multinomial logistic regression and
//! exact 0-1 empirical risk minimisation in one and two dimensions.

mod erm;
mod logreg;
mod ncc;

pub use erm::{fit_erm01_1d, fit_erm01_2d, Erm01Fit};
pub use logreg::fit_logreg;
pub use ncc::fit_ncc;

use crate::data::LabeledFeatureSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Ncc,
    Logistic,
    Erm01,
}

/// `logits(z) = W z + b`; prediction is the first index of the maximum logit.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    n_classes: usize,
    dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    kind: ClassifierKind,
    centroids: Option<Vec<f64>>,
}

impl LinearClassifier {
    /// `weights` is `n_classes x dim`, row-major.
    pub fn new(
        n_classes: usize,
        dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        kind: ClassifierKind,
    ) -> Result<Self> {
        if n_classes == 0 || dim == 0 {
            return Err(Error::Validation("classifier needs at least one class and one dimension".into()));
        }
        if weights.len() != n_classes * dim || bias.len() != n_classes {
            return Err(Error::Validation("classifier parameters have the wrong shape".into()));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Validation("classifier parameters must be finite".into()));
        }
        Ok(Self {
            n_classes,
            dim,
            weights,
            bias,
            kind,
            centroids: None,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_row(&self, c: usize) -> &[f64] {
        &self.weights[c * self.dim..(c + 1) * self.dim]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Class centroids, for nearest-centroid classifiers only.
    pub fn centroids(&self) -> Option<&[f64]> {
        self.centroids.as_deref()
    }

    pub fn logits(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| dot(self.weight_row(c), z) + self.bias[c])
            .collect()
    }

    pub fn predict(&self, z: &[f64]) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for c in 0..self.n_classes {
            let v = dot(self.weight_row(c), z) + self.bias[c];
            if v > best_val {
                best = c;
                best_val = v;
            }
        }
        best
    }

    pub fn predict_all(&self, data: &LabeledFeatureSet) -> Vec<usize> {
        data.rows().map(|r| self.predict(r)).collect()
    }

    /// For a binary classifier, `(w, bias)` such that class 1 is predicted
    /// exactly when `w . z + bias > 0`.
    pub fn binary_direction(&self) -> Result<(Vec<f64>, f64)> {
        if self.n_classes != 2 {
            return Err(Error::Precondition(format!(
                "binary direction needs 2 classes, classifier has {}",
                self.n_classes
            )));
        }
        let w = self
            .weight_row(1)
            .iter()
            .zip(self.weight_row(0))
            .map(|(a, b)| a - b)
            .collect();
        Ok((w, self.bias[1] - self.bias[0]))
    }

    /// The same rule expressed on unscaled inputs, for a classifier trained
    /// on features whose column `k` was multiplied by `s[k]`.
    pub fn compose_diagonal(&self, s: &[f64]) -> Result<Self> {
        if s.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: s.len(),
            });
        }
        let mut weights = self.weights.clone();
        for row in weights.chunks_exact_mut(self.dim) {
            for (w, f) in row.iter_mut().zip(s) {
                *w *= f;
            }
        }
        Ok(Self {
            weights,
            centroids: None,
            ..self.clone()
        })
    }

    pub(crate) fn with_centroids(mut self, centroids: Vec<f64>) -> Self {
        self.centroids = Some(centroids);
        self
    }
}

/// Optimiser settings for logistic regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// L2 penalty on the weights; `None` means `1 / n_rows`.
    pub l2_lambda: Option<f64>,
    pub max_iters: usize,
    /// Stop once the gradient norm is at most this.
    pub tolerance: f64,
    /// L-BFGS memory.
    pub history: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            l2_lambda: None,
            max_iters: 500,
            tolerance: 1e-8,
            history: 10,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Validation("tolerance must be positive".into()));
        }
        if let Some(l) = self.l2_lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::Validation(format!("l2 lambda must be finite and >= 0, got {l}")));
            }
        }
        if self.history == 0 {
            return Err(Error::Validation("history must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fraction of query rows whose prediction differs from the label.
pub fn evaluate(clf: &LinearClassifier, query: &LabeledFeatureSet) -> Result<f64> {
    if query.dim() != clf.dim() {
        return Err(Error::DimMismatch {
            expected: clf.dim(),
            found: query.dim(),
        });
    }
    if query.n_samples() == 0 {
        return Err(Error::Precondition("query split is empty".into()));
    }
    let wrong = query
        .rows()
        .zip(query.labels())
        .filter(|(r, &l)| clf.predict(r) != l)
        .count();
    Ok(wrong as f64 / query.n_samples() as f64)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[[f64; 1]], labels: &[usize]) -> LabeledFeatureSet {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        LabeledFeatureSet::from_rows(&rows, labels.to_vec(), 2).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let q = set(&[[-1.0], [-2.0], [1.0], [3.0]], &[0, 0, 1, 1]);
        let right = LinearClassifier::new(2, 1, vec![0.0, 1.0], vec![0.0, 0.0], ClassifierKind::Logistic).unwrap();
        assert_eq!(evaluate(&right, &q).unwrap(), 0.0);
        let wrong = LinearClassifier::new(2, 1, vec![0.0, -1.0], vec![0.0, 0.0], ClassifierKind::Logistic).unwrap();
        assert_eq!(evaluate(&wrong, &q).unwrap(), 1.0);
        let constant = LinearClassifier::new(2, 1, vec![0.0, 0.0], vec![0.0, 0.0], ClassifierKind::Logistic).unwrap();
        assert_eq!(evaluate(&constant, &q).unwrap(), 0.5);
    }

    #[test]
    fn binary_direction_agrees_with_predict() {
        let clf = LinearClassifier::new(2, 2, vec![1.0, -2.0, 0.5, 3.0], vec![0.25, -1.0], ClassifierKind::Logistic).unwrap();
        let (w, b) = clf.binary_direction().unwrap();
        for z in [[0.0, 0.0], [1.0, 1.0], [-3.0, 0.5], [2.0, -1.0]] {
            assert_eq!(clf.predict(&z) == 1, dot(&w, &z) + b > 0.0);
        }
    }

    #[test]
    fn compose_diagonal_matches_scaled_inputs() {
        let clf = LinearClassifier::new(3, 2, vec![1.0, -2.0, 0.5, 3.0, -1.0, 0.0], vec![0.25, -1.0, 0.0], ClassifierKind::Logistic).unwrap();
        let s = [2.0, 0.5];
        let composed = clf.compose_diagonal(&s).unwrap();
        let z = [1.5, -0.75];
        let zs = [z[0] * s[0], z[1] * s[1]];
        assert_eq!(clf.logits(&zs), composed.logits(&z));
    }
}
