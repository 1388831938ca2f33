//! Exact minimisers of the empirical 0-1 loss over linear classifiers with a
//! bias, in one and two dimensions.
//!
//! Labels are 0 and 1; a fitted classifier predicts 1 exactly when
//! `u . z + beta > 0`.

use super::{ClassifierKind, LinearClassifier};
use crate::data::LabeledFeatureSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Erm01Fit {
    pub classifier: LinearClassifier,
    /// Misclassified training rows over all training rows.
    pub empirical_error: f64,
    pub errors: usize,
    /// Set when the training set held a single class or a single location.
    pub degenerate: bool,
}

/// Best threshold split of points on a line.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Split {
    errors: usize,
    threshold: f64,
    /// +1 predicts label 1 above the threshold, -1 below it.
    orientation: f64,
}

// Thresholds at min - 1, every gap midpoint and max + 1, each tried with
// orientation +1 then -1; the first strict minimum wins.
fn best_split(points: &mut [(f64, usize)]) -> Split {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_b = points.iter().filter(|p| p.1 == 1).count();
    let total_a = points.len() - total_b;
    let first = points.first().map_or(0.0, |p| p.0);
    let last = points.last().map_or(0.0, |p| p.0);

    // Below the threshold so far.
    let (mut below_a, mut below_b) = (0usize, 0usize);
    let mut best = Split {
        errors: usize::MAX,
        threshold: 0.0,
        orientation: 1.0,
    };
    let mut consider = |t: f64, below_a: usize, below_b: usize| {
        // +1: above predicted 1, so errors are b below plus a above.
        let plus = below_b + (total_a - below_a);
        let minus = below_a + (total_b - below_b);
        if plus < best.errors {
            best = Split { errors: plus, threshold: t, orientation: 1.0 };
        }
        if minus < best.errors {
            best = Split { errors: minus, threshold: t, orientation: -1.0 };
        }
    };
    consider(first - 1.0, 0, 0);
    let mut i = 0;
    while i < points.len() {
        let v = points[i].0;
        while i < points.len() && points[i].0 == v {
            if points[i].1 == 1 {
                below_b += 1;
            } else {
                below_a += 1;
            }
            i += 1;
        }
        let t = if i < points.len() {
            0.5 * (v + points[i].0)
        } else {
            last + 1.0
        };
        consider(t, below_a, below_b);
    }
    best
}

fn binary_labels(train: &LabeledFeatureSet, needed_dim: usize) -> Result<()> {
    if train.dim() != needed_dim {
        return Err(Error::DimMismatch {
            expected: needed_dim,
            found: train.dim(),
        });
    }
    if train.n_classes() > 2 {
        return Err(Error::Precondition(format!(
            "0-1 ERM is binary, got {} classes",
            train.n_classes()
        )));
    }
    if train.n_samples() < 2 {
        return Err(Error::Precondition("0-1 ERM needs at least 2 samples".into()));
    }
    Ok(())
}

fn constant_fit(train: &LabeledFeatureSet, dim: usize, degenerate: bool) -> Result<Erm01Fit> {
    let n_b = train.labels().iter().filter(|&&l| l == 1).count();
    let n_a = train.n_samples() - n_b;
    // Predict the majority; ties go to class 0.
    let beta = if n_b > n_a { 1.0 } else { 0.0 };
    let errors = n_a.min(n_b);
    finish(train, dim, vec![0.0; dim], beta, errors, degenerate)
}

fn finish(
    train: &LabeledFeatureSet,
    dim: usize,
    u: Vec<f64>,
    beta: f64,
    errors: usize,
    degenerate: bool,
) -> Result<Erm01Fit> {
    let c_n = train.n_classes().max(2);
    let mut weights = vec![0.0; dim];
    weights.extend(u);
    let classifier = LinearClassifier::new(c_n, dim, weights, vec![0.0, beta], ClassifierKind::Erm01)?;
    Ok(Erm01Fit {
        classifier,
        empirical_error: errors as f64 / train.n_samples() as f64,
        errors,
        degenerate,
    })
}

/// Exact 0-1 ERM on one feature by scanning every threshold.
pub fn fit_erm01_1d(train: &LabeledFeatureSet) -> Result<Erm01Fit> {
    binary_labels(train, 1)?;
    if train.n_classes() == 1 {
        return constant_fit(train, 1, true);
    }
    let mut pts: Vec<(f64, usize)> = train.rows().map(|r| r[0]).zip(train.labels().iter().copied()).collect();
    let split = best_split(&mut pts);
    let o = split.orientation;
    finish(train, 1, vec![o], -o * split.threshold, split.errors, false)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    LeftIsB,
    LeftIsA,
}

struct Candidate {
    errors: usize,
    anchor: [f64; 2],
    dir: [f64; 2],
    split: Split,
    side: Side,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Exact 0-1 ERM on two features.
///
/// For every anchor point the line through it is rotated through a half
/// turn, stopping at each direction that passes through another point. Off
/// the line, points are classified by side; on the line, by the best 1-D
/// threshold, which a small rotation about that threshold realises. Runs in
/// O(n^2 log n).
pub fn fit_erm01_2d(train: &LabeledFeatureSet) -> Result<Erm01Fit> {
    binary_labels(train, 2)?;
    if train.n_classes() == 1 {
        return constant_fit(train, 2, true);
    }
    let pts: Vec<[f64; 2]> = train.rows().map(|r| [r[0], r[1]]).collect();
    let labels = train.labels();
    let n = pts.len();
    let n_b = labels.iter().filter(|&&l| l == 1).count();
    let mut best_errors = n_b.min(n - n_b);
    let mut best: Option<Candidate> = None;

    struct Dir {
        key: f64,
        d: [f64; 2],
        flipped: bool,
        idx: usize,
    }
    let mut dirs: Vec<Dir> = Vec::with_capacity(n);
    let mut dups: Vec<usize> = Vec::new();
    let mut left = vec![false; n];
    let mut online: Vec<(f64, usize)> = Vec::new();

    for (pi, &p) in pts.iter().enumerate() {
        dirs.clear();
        dups.clear();
        for (qi, &q) in pts.iter().enumerate() {
            if qi == pi {
                continue;
            }
            let v = sub(q, p);
            if v == [0.0, 0.0] {
                dups.push(qi);
                continue;
            }
            let flipped = v[1] < 0.0 || (v[1] == 0.0 && v[0] < 0.0);
            let d = if flipped { [-v[0], -v[1]] } else { v };
            dirs.push(Dir {
                key: (d[1] + 0.0).atan2(d[0]),
                d,
                flipped,
                idx: qi,
            });
        }
        if dirs.is_empty() {
            continue;
        }
        dirs.sort_by(|a, b| a.key.total_cmp(&b.key).then(a.idx.cmp(&b.idx)));

        // Group boundaries: consecutive directions that are exactly parallel.
        let mut groups: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for i in 1..=dirs.len() {
            if i == dirs.len() || cross(dirs[start].d, dirs[i].d) != 0.0 {
                groups.push((start, i));
                start = i;
            }
        }

        // Sides just before the first group's direction.
        let d0 = dirs[0].d;
        let (mut left_a, mut left_b, mut right_a, mut right_b) = (0usize, 0usize, 0usize, 0usize);
        let first_end = groups[0].1;
        for (j, e) in dirs.iter().enumerate() {
            let is_left = if j < first_end {
                !e.flipped
            } else {
                cross(d0, sub(pts[e.idx], p)) > 0.0
            };
            left[e.idx] = is_left;
            match (is_left, labels[e.idx] == 1) {
                (true, true) => left_b += 1,
                (true, false) => left_a += 1,
                (false, true) => right_b += 1,
                (false, false) => right_a += 1,
            }
        }

        for &(gs, ge) in &groups {
            for e in &dirs[gs..ge] {
                match (left[e.idx], labels[e.idx] == 1) {
                    (true, true) => left_b -= 1,
                    (true, false) => left_a -= 1,
                    (false, true) => right_b -= 1,
                    (false, false) => right_a -= 1,
                }
            }
            let d = dirs[gs].d;
            let b_side = left_a + right_b;
            let a_side = left_b + right_a;
            let off = b_side.min(a_side);
            if off < best_errors {
                online.clear();
                online.push((0.0, labels[pi]));
                online.extend(dups.iter().map(|&q| (0.0, labels[q])));
                online.extend(dirs[gs..ge].iter().map(|e| (dot2(d, sub(pts[e.idx], p)), labels[e.idx])));
                let split = best_split(&mut online);
                let total = off + split.errors;
                if total < best_errors {
                    best_errors = total;
                    best = Some(Candidate {
                        errors: total,
                        anchor: p,
                        dir: d,
                        split,
                        side: if b_side <= a_side { Side::LeftIsB } else { Side::LeftIsA },
                    });
                }
            }
            for e in &dirs[gs..ge] {
                let is_left = e.flipped;
                left[e.idx] = is_left;
                match (is_left, labels[e.idx] == 1) {
                    (true, true) => left_b += 1,
                    (true, false) => left_a += 1,
                    (false, true) => right_b += 1,
                    (false, false) => right_a += 1,
                }
            }
        }
    }

    let Some(c) = best else {
        let all_same = pts.iter().all(|&q| q == pts[0]);
        return constant_fit(train, 2, all_same);
    };
    let (u, beta) = realise(&c, &pts);
    finish(train, 2, u.to_vec(), beta, c.errors, false)
}

// Turns a candidate into explicit parameters: the line through the anchor,
// rotated by a small angle about the on-line threshold.
fn realise(c: &Candidate, pts: &[[f64; 2]]) -> ([f64; 2], f64) {
    let (p, d) = (c.anchor, c.dir);
    let nrm = [-d[1], d[0]];
    let tau = c.split.threshold;
    let mut limit = f64::INFINITY;
    for &z in pts {
        let v = sub(z, p);
        let across = dot2(nrm, v);
        if across == 0.0 {
            continue;
        }
        let along = dot2(d, v) - tau;
        if along != 0.0 {
            limit = limit.min(across.abs() / along.abs());
        }
    }
    let magnitude = (0.5 * limit).min(1.0);
    let sign = match c.side {
        Side::LeftIsB => c.split.orientation,
        Side::LeftIsA => -c.split.orientation,
    };
    let theta = sign * magnitude;
    let u = [nrm[0] + theta * d[0], nrm[1] + theta * d[1]];
    let beta = -dot2(u, p) - theta * tau;
    match c.side {
        Side::LeftIsB => (u, beta),
        Side::LeftIsA => ([-u[0], -u[1]], -beta),
    }
}

/// Errors of the best classifier found by trying every line through two
/// points in both orientations. O(n^3 log n); a test oracle.
#[cfg(test)]
pub(crate) fn brute_force_errors_2d(pts: &[[f64; 2]], labels: &[usize]) -> usize {
    use std::cmp::Ordering;
    let n = pts.len();
    let n_b = labels.iter().filter(|&&l| l == 1).count();
    let mut best = n_b.min(n - n_b);
    for i in 0..n {
        for j in 0..n {
            let d = sub(pts[j], pts[i]);
            if d == [0.0, 0.0] {
                continue;
            }
            let (mut lb, mut la, mut rb, mut ra) = (0, 0, 0, 0);
            let mut on = Vec::new();
            for k in 0..n {
                let v = sub(pts[k], pts[i]);
                let c = cross(d, v);
                let is_b = labels[k] == 1;
                match c.partial_cmp(&0.0) {
                    Some(Ordering::Greater) => {
                        if is_b {
                            lb += 1
                        } else {
                            la += 1
                        }
                    }
                    Some(Ordering::Less) => {
                        if is_b {
                            rb += 1
                        } else {
                            ra += 1
                        }
                    }
                    _ => on.push((dot2(d, v), labels[k])),
                }
            }
            let off = (la + rb).min(lb + ra);
            best = best.min(off + best_split(&mut on).errors);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::evaluate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(rows: &[[f64; 2]], labels: &[usize]) -> LabeledFeatureSet {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        let c = labels.iter().max().unwrap() + 1;
        LabeledFeatureSet::from_rows(&rows, labels.to_vec(), c).unwrap()
    }

    fn set1(xs: &[f64], labels: &[usize]) -> LabeledFeatureSet {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let c = labels.iter().max().unwrap() + 1;
        LabeledFeatureSet::from_rows(&rows, labels.to_vec(), c).unwrap()
    }

    fn recount(fit: &Erm01Fit, data: &LabeledFeatureSet) -> usize {
        (evaluate(&fit.classifier, data).unwrap() * data.n_samples() as f64).round() as usize
    }

    #[test]
    fn one_dim_examples() {
        let fit = fit_erm01_1d(&set1(&[0.0, 1.0], &[0, 1])).unwrap();
        assert_eq!(fit.errors, 0);
        let (w, b) = fit.classifier.binary_direction().unwrap();
        assert_eq!(-b / w[0], 0.5);

        let data = set1(&[0.0, 1.0, 0.5], &[0, 0, 1]);
        let fit = fit_erm01_1d(&data).unwrap();
        assert_eq!(fit.errors, 1);
        assert!((fit.empirical_error - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(recount(&fit, &data), 1);

        let data = set1(&[2.0, 2.0, 2.0, 2.0], &[0, 1, 0, 1]);
        let fit = fit_erm01_1d(&data).unwrap();
        assert_eq!(fit.empirical_error, 0.5);
    }

    #[test]
    fn single_class_is_degenerate() {
        let fit = fit_erm01_1d(&set1(&[0.0, 3.0], &[0, 0])).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.errors, 0);
    }

    #[test]
    fn one_dim_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(2..15);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let data = set1(&xs, &labels);
            let fit = fit_erm01_1d(&data).unwrap();
            let mut brute = usize::MAX;
            for t in (-1..=12).map(|k| k as f64 * 0.5 - 0.25) {
                let above_b = (0..n).filter(|&i| xs[i] > t && labels[i] == 1).count();
                let above_a = (0..n).filter(|&i| xs[i] > t && labels[i] == 0).count();
                let below_b = (0..n).filter(|&i| xs[i] < t && labels[i] == 1).count();
                let below_a = (0..n).filter(|&i| xs[i] < t && labels[i] == 0).count();
                brute = brute.min(above_a + below_b).min(above_b + below_a);
            }
            assert_eq!(fit.errors, brute);
            assert_eq!(recount(&fit, &data), fit.errors);
        }
    }

    #[test]
    fn two_dim_examples() {
        let data = set(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]], &[0, 0, 1, 1]);
        let fit = fit_erm01_2d(&data).unwrap();
        assert_eq!(fit.errors, 0);
        assert_eq!(recount(&fit, &data), 0);

        let xor = set(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]], &[0, 0, 1, 1]);
        let fit = fit_erm01_2d(&xor).unwrap();
        assert_eq!(fit.empirical_error, 0.25);
        assert_eq!(recount(&fit, &xor), 1);
    }

    #[test]
    fn identical_points_fall_back_to_constant() {
        let data = set(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]], &[0, 1, 1]);
        let fit = fit_erm01_2d(&data).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.errors, 1);
        assert_eq!(recount(&fit, &data), 1);
    }

    #[test]
    fn collinear_points_use_the_line_split() {
        let data = set(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]], &[0, 0, 1, 1, 0]);
        let fit = fit_erm01_2d(&data).unwrap();
        assert_eq!(fit.errors, 1);
        assert_eq!(recount(&fit, &data), 1);
    }

    fn check_random(rng: &mut ChaCha8Rng, grid: bool) {
        let n = rng.random_range(2..=20);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                if grid {
                    [rng.random_range(-3..=3) as f64, rng.random_range(-3..=3) as f64]
                } else {
                    [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
                }
            })
            .collect();
        let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let data = set(&pts, &labels);
        let fit = fit_erm01_2d(&data).unwrap();
        assert_eq!(fit.errors, brute_force_errors_2d(&pts, &labels), "{pts:?} {labels:?}");
        assert_eq!(recount(&fit, &data), fit.errors, "{pts:?} {labels:?}");
    }

    #[test]
    fn two_dim_matches_brute_force_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            check_random(&mut rng, false);
        }
    }

    #[test]
    fn two_dim_matches_brute_force_on_grid_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            check_random(&mut rng, true);
        }
    }

    #[test]
    fn random_directions_never_beat_the_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 16;
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let fit = fit_erm01_2d(&set(&pts, &labels)).unwrap();
            for k in 0..360 {
                let a = k as f64 * std::f64::consts::PI / 180.0;
                let mut proj: Vec<(f64, usize)> = pts.iter().map(|p| p[0] * a.cos() + p[1] * a.sin()).zip(labels.iter().copied()).collect();
                assert!(best_split(&mut proj).errors >= fit.errors);
            }
        }
    }
}
