use super::{ClassifierKind, LinearClassifier};
use crate::data::LabeledFeatureSet;
use crate::error::{Error, Result};

/// Nearest-centroid classifier with `W_c = 2 p_c` and `b_c = -p_c . p_c`,
/// where `p_c` is the mean of the class-`c` rows.
pub fn fit_ncc(train: &LabeledFeatureSet) -> Result<LinearClassifier> {
    let (c_n, dim) = (train.n_classes(), train.dim());
    let counts = train.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Precondition(format!("class {c} has no training samples")));
    }
    let mut centroids = vec![0.0; c_n * dim];
    for (row, &l) in train.rows().zip(train.labels()) {
        for (p, v) in centroids[l * dim..(l + 1) * dim].iter_mut().zip(row) {
            *p += v;
        }
    }
    for (c, chunk) in centroids.chunks_exact_mut(dim).enumerate() {
        let n = counts[c] as f64;
        chunk.iter_mut().for_each(|p| *p /= n);
    }
    let weights = centroids.iter().map(|p| 2.0 * p).collect();
    let bias = centroids
        .chunks_exact(dim)
        .map(|p| -p.iter().map(|x| x * x).sum::<f64>())
        .collect();
    Ok(LinearClassifier::new(c_n, dim, weights, bias, ClassifierKind::Ncc)?.with_centroids(centroids))
}
