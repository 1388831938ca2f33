//! Labelled feature sets, episodes and deterministic seeding.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A dense `n_samples x dim` feature matrix with class labels.
///
/// Rows that share a group id are augmented views of one underlying sample.
/// Within a group the first row (in row order) is the base sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatureSet {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    groups: Option<Vec<u32>>,
    n_classes: usize,
}

impl LabeledFeatureSet {
    pub fn new(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        n_classes: usize,
        groups: Option<Vec<u32>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("feature dimension must be at least 1".into()));
        }
        if n_classes == 0 {
            return Err(Error::Validation("n_classes must be at least 1".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::Validation(format!(
                "feature buffer holds {} values, expected {} rows x {} dims",
                features.len(),
                labels.len(),
                dim
            )));
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(Error::Validation(format!(
                "row {row}: label {label} out of range for {n_classes} classes"
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "row {}: non-finite feature in dimension {}",
                pos / dim,
                pos % dim
            )));
        }
        let mut counts = vec![0usize; n_classes];
        for &l in &labels {
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::Validation(format!("class {c} has no samples")));
        }
        if let Some(g) = &groups {
            if g.len() != labels.len() {
                return Err(Error::Validation(format!(
                    "{} group ids for {} rows",
                    g.len(),
                    labels.len()
                )));
            }
            let mut seen = std::collections::HashMap::new();
            for (row, (&gid, &label)) in g.iter().zip(&labels).enumerate() {
                match seen.insert(gid, label) {
                    Some(prev) if prev != label => {
                        return Err(Error::Validation(format!(
                            "row {row}: group {gid} mixes labels {prev} and {label}"
                        )));
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            features,
            dim,
            labels,
            groups,
            n_classes,
        })
    }

    /// Convenience constructor from row vectors, without view groups.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                found: rows[bad].len(),
            });
        }
        let features = rows.iter().flatten().copied().collect();
        Self::new(features, dim, labels, n_classes, None)
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn groups(&self) -> Option<&[u32]> {
        self.groups.as_deref()
    }

    pub fn has_groups(&self) -> bool {
        self.groups.is_some()
    }

    /// Row-major feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Same labels and groups with a replacement feature buffer.
    pub(crate) fn with_features(&self, features: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(features.len(), self.features.len());
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "row {}: non-finite feature in dimension {} after transform",
                pos / self.dim,
                pos % self.dim
            )));
        }
        Ok(Self {
            features,
            ..self.clone()
        })
    }

    /// Rows grouped into sampling units (a view group, or a single row when
    /// there are no groups), in order of first appearance.
    pub fn units(&self) -> Vec<Vec<usize>> {
        match &self.groups {
            None => (0..self.n_samples()).map(|i| vec![i]).collect(),
            Some(groups) => {
                let mut order: Vec<Vec<usize>> = Vec::new();
                let mut slot = std::collections::HashMap::new();
                for (row, gid) in groups.iter().enumerate() {
                    let idx = *slot.entry(*gid).or_insert_with(|| {
                        order.push(Vec::new());
                        order.len() - 1
                    });
                    order[idx].push(row);
                }
                order
            }
        }
    }

    /// Units bucketed by class label.
    pub fn units_by_class(&self) -> Vec<Vec<Vec<usize>>> {
        let mut by_class = vec![Vec::new(); self.n_classes];
        for unit in self.units() {
            by_class[self.labels[unit[0]]].push(unit);
        }
        by_class
    }

    /// Only the base row of every unit; groups are dropped.
    pub fn base_rows(&self) -> Self {
        if self.groups.is_none() {
            return self.clone();
        }
        let rows: Vec<usize> = self.units().into_iter().map(|u| u[0]).collect();
        self.select_rows(&rows, false)
    }

    /// Subset of rows in the given order. Class coverage is not re-checked.
    pub(crate) fn select_rows(&self, rows: &[usize], keep_groups: bool) -> Self {
        let mut features = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            features.extend_from_slice(self.row(r));
        }
        Self {
            features,
            dim: self.dim,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            groups: match (&self.groups, keep_groups) {
                (Some(g), true) => Some(rows.iter().map(|&r| g[r]).collect()),
                _ => None,
            },
            n_classes: self.n_classes,
        }
    }
}

/// A C-way K-shot task with a train split and a query split.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub way: usize,
    pub shot: usize,
    pub train: LabeledFeatureSet,
    pub query: LabeledFeatureSet,
    pub task_id: u64,
    /// Original class id of each episode label, in draw order.
    pub classes: Vec<usize>,
}

impl Episode {
    /// Train split without augmentation views.
    pub fn base_train(&self) -> LabeledFeatureSet {
        self.train.base_rows()
    }
}

/// Inputs of the per-task seed derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub task_index: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

// SplitMix64 output function; a bijection on u64.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-task seed. Injective in each argument when the other is held fixed.
pub fn derive_task_seed(spec: SeedSpec) -> u64 {
    splitmix64(splitmix64(spec.base_seed) ^ spec.task_index)
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws a `way`-way `shot`-shot episode with `query_per_class` query samples
/// per class.
///
/// Classes are drawn without replacement and relabelled `0..way` in draw
/// order. Within each class `shot + query_per_class` units are drawn; the
/// first `shot` go to train (with all of their views) and the rest go to the
/// query split as base rows only.
pub fn sample_episode(
    data: &LabeledFeatureSet,
    way: usize,
    shot: usize,
    query_per_class: usize,
    seed: u64,
) -> Result<Episode> {
    if way < 2 {
        return Err(Error::Precondition(format!("way must be at least 2, got {way}")));
    }
    if shot == 0 || query_per_class == 0 {
        return Err(Error::Precondition(
            "shot and query_per_class must both be at least 1".into(),
        ));
    }
    if data.n_classes() < way {
        return Err(Error::InsufficientClasses {
            needed: way,
            available: data.n_classes(),
        });
    }
    let by_class = data.units_by_class();
    let mut rng = rng_from_seed(seed);
    let classes = index::sample(&mut rng, data.n_classes(), way).into_vec();
    let needed = shot + query_per_class;

    let mut train_rows = Vec::new();
    let mut train_labels = Vec::new();
    let mut train_groups = Vec::new();
    let mut query_rows = Vec::new();
    let mut query_labels = Vec::new();
    let mut next_group = 0u32;
    for (new_label, &class) in classes.iter().enumerate() {
        let units = &by_class[class];
        if units.len() < needed {
            return Err(Error::InsufficientSamples {
                class,
                needed,
                available: units.len(),
            });
        }
        let picks = index::sample(&mut rng, units.len(), needed).into_vec();
        for &u in &picks[..shot] {
            for &row in &units[u] {
                train_rows.push(row);
                train_labels.push(new_label);
                train_groups.push(next_group);
            }
            next_group += 1;
        }
        for &u in &picks[shot..] {
            query_rows.push(units[u][0]);
            query_labels.push(new_label);
        }
    }

    let gather = |rows: &[usize]| -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * data.dim());
        for &r in rows {
            out.extend_from_slice(data.row(r));
        }
        out
    };
    let train = LabeledFeatureSet::new(
        gather(&train_rows),
        data.dim(),
        train_labels,
        way,
        data.has_groups().then_some(train_groups),
    )?;
    let query = LabeledFeatureSet::new(gather(&query_rows), data.dim(), query_labels, way, None)?;
    Ok(Episode {
        way,
        shot,
        train,
        query,
        task_id: seed,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n_classes: usize, per_class: usize) -> LabeledFeatureSet {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..n_classes {
            for i in 0..per_class {
                rows.push(vec![c as f64, i as f64]);
                labels.push(c);
            }
        }
        LabeledFeatureSet::from_rows(&rows, labels, n_classes).unwrap()
    }

    #[test]
    fn task_seed_is_deterministic_and_separates_inputs() {
        let s = |b, i| derive_task_seed(SeedSpec { base_seed: b, task_index: i });
        assert_eq!(s(7, 0), s(7, 0));
        assert_ne!(s(7, 0), s(7, 1));
        assert_ne!(s(7, 0), s(8, 0));
    }

    #[test]
    fn episode_sampling_is_deterministic() {
        let data = toy(6, 10);
        let a = sample_episode(&data, 3, 2, 4, 99).unwrap();
        let b = sample_episode(&data, 3, 2, 4, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.n_samples(), 6);
        assert_eq!(a.query.n_samples(), 12);
    }

    #[test]
    fn full_draw_partitions_every_class() {
        let data = toy(3, 5);
        let ep = sample_episode(&data, 3, 2, 3, 1).unwrap();
        let mut seen: Vec<(u64, u64)> = ep
            .train
            .rows()
            .chain(ep.query.rows())
            .map(|r| (r[0] as u64, r[1] as u64))
            .collect();
        seen.sort_unstable();
        let mut all: Vec<(u64, u64)> = data.rows().map(|r| (r[0] as u64, r[1] as u64)).collect();
        all.sort_unstable();
        assert_eq!(seen, all);
    }

    #[test]
    fn labels_follow_draw_order() {
        let data = toy(5, 4);
        let ep = sample_episode(&data, 3, 1, 1, 5).unwrap();
        for (row, &label) in ep.train.rows().zip(ep.train.labels()) {
            assert_eq!(row[0] as usize, ep.classes[label]);
        }
    }

    #[test]
    fn insufficient_samples_names_the_class() {
        let data = toy(2, 3);
        let err = sample_episode(&data, 2, 3, 1, 0).unwrap_err();
        assert!(err.to_string().contains("insufficient samples"), "{err}");
        assert!(matches!(err, Error::InsufficientSamples { needed: 4, available: 3, .. }));
    }

    #[test]
    fn insufficient_classes() {
        let data = toy(2, 3);
        assert!(matches!(
            sample_episode(&data, 3, 1, 1, 0),
            Err(Error::InsufficientClasses { needed: 3, available: 2 })
        ));
    }

    #[test]
    fn views_travel_with_their_base_sample() {
        // Two classes, three groups each, base row followed by two views.
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        for c in 0..2usize {
            for g in 0..3u32 {
                for v in 0..3 {
                    feats.push((c * 100) as f64 + g as f64 * 10.0 + v as f64);
                    labels.push(c);
                    groups.push(c as u32 * 3 + g);
                }
            }
        }
        let data = LabeledFeatureSet::new(feats, 1, labels, 2, Some(groups)).unwrap();
        let ep = sample_episode(&data, 2, 1, 2, 3).unwrap();
        assert_eq!(ep.train.n_samples(), 6);
        let tg = ep.train.groups().unwrap();
        for chunk in 0..2 {
            let rows: Vec<f64> = (0..3).map(|v| ep.train.row(chunk * 3 + v)[0]).collect();
            assert_eq!(rows[1], rows[0] + 1.0);
            assert_eq!(rows[2], rows[0] + 2.0);
            assert!(tg[chunk * 3..chunk * 3 + 3].iter().all(|&g| g == tg[chunk * 3]));
        }
        // Query holds base rows only.
        assert_eq!(ep.query.n_samples(), 4);
        assert!(ep.query.rows().all(|r| r[0] as u64 % 10 == 0));
        assert_eq!(ep.base_train().n_samples(), 2);
    }

    #[test]
    fn train_and_query_are_disjoint() {
        let data = toy(4, 8);
        let ep = sample_episode(&data, 4, 3, 5, 11).unwrap();
        for q in ep.query.rows() {
            assert!(ep.train.rows().all(|t| t != q));
        }
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(LabeledFeatureSet::new(vec![0.0, f64::NAN], 1, vec![0, 1], 2, None).is_err());
        assert!(LabeledFeatureSet::new(vec![0.0, 1.0], 1, vec![0, 2], 2, None).is_err());
        assert!(LabeledFeatureSet::new(vec![0.0, 1.0], 1, vec![0, 0], 2, None).is_err());
        assert!(LabeledFeatureSet::new(vec![0.0, 1.0], 1, vec![0, 1], 2, Some(vec![5, 5])).is_err());
    }
}
