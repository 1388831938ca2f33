use std::collections::VecDeque;

use super::{ClassifierKind, FitConfig, LinearClassifier};
use crate::data::LabeledFeatureSet;
use crate::error::{Error, Result};

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Multinomial logistic regression with an L2 penalty on the weights only.
///
/// Minimises `mean cross-entropy + lambda / 2 * |W|^2` from a zero start with
/// L-BFGS and Armijo backtracking. Stops when the gradient norm reaches the
/// tolerance, after `max_iters` iterations, or when the line search cannot
/// make progress.
pub fn fit_logreg(train: &LabeledFeatureSet, cfg: &FitConfig) -> Result<LinearClassifier> {
    cfg.validate()?;
    if train.n_classes() < 2 {
        return Err(Error::Precondition("logistic regression needs at least 2 classes".into()));
    }
    let problem = Problem {
        x: train.features(),
        y: train.labels(),
        dim: train.dim(),
        classes: train.n_classes(),
        lambda: cfg.l2_lambda.unwrap_or(1.0 / train.n_samples() as f64),
    };
    let n_params = problem.classes * (problem.dim + 1);
    let mut params = vec![0.0; n_params];
    let mut grad = vec![0.0; n_params];
    let mut loss = problem.eval(&params, &mut grad);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { iteration: 0 });
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.history);
    let mut trial = vec![0.0; n_params];
    let mut trial_grad = vec![0.0; n_params];
    for iter in 0..cfg.max_iters {
        let gnorm = norm(&grad);
        if gnorm <= cfg.tolerance {
            break;
        }
        let mut dir = two_loop(&grad, &history);
        let mut slope = dot(&grad, &dir);
        let mut step = 1.0;
        if history.is_empty() || !(slope < 0.0) {
            history.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
            step = (1.0 / gnorm).min(1.0);
        }

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for ((t, p), d) in trial.iter_mut().zip(&params).zip(&dir) {
                *t = p + step * d;
            }
            let f = problem.eval(&trial, &mut trial_grad);
            if f.is_nan() {
                return Err(Error::NonFiniteLoss { iteration: iter + 1 });
            }
            if f <= loss + ARMIJO_C1 * step * slope {
                accepted = Some(f);
                break;
            }
            step *= 0.5;
        }
        let Some(f) = accepted else { break };

        let s: Vec<f64> = trial.iter().zip(&params).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == cfg.history {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut params, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        loss = f;
    }

    let w_len = problem.classes * problem.dim;
    let bias = params.split_off(w_len);
    LinearClassifier::new(problem.classes, problem.dim, params, bias, ClassifierKind::Logistic)
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [usize],
    dim: usize,
    classes: usize,
    lambda: f64,
}

impl Problem<'_> {
    // Loss and gradient; parameters are W (classes x dim) followed by b.
    fn eval(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let (dim, k) = (self.dim, self.classes);
        let (w, b) = params.split_at(k * dim);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n = self.y.len() as f64;
        let mut logits = vec![0.0; k];
        let mut total = 0.0;
        for (row, &label) in self.x.chunks_exact(dim).zip(self.y) {
            let mut max = f64::NEG_INFINITY;
            for c in 0..k {
                let v = super::dot(&w[c * dim..(c + 1) * dim], row) + b[c];
                logits[c] = v;
                max = max.max(v);
            }
            let sum: f64 = logits.iter().map(|v| (v - max).exp()).sum();
            let lse = max + sum.ln();
            total += lse - logits[label];
            for c in 0..k {
                let p = (logits[c] - lse).exp();
                let r = (p - if c == label { 1.0 } else { 0.0 }) / n;
                let gw = &mut grad[c * dim..(c + 1) * dim];
                for (g, x) in gw.iter_mut().zip(row) {
                    *g += r * x;
                }
                grad[k * dim + c] += r;
            }
        }
        let mut penalty = 0.0;
        for (g, wv) in grad[..k * dim].iter_mut().zip(w) {
            *g += self.lambda * wv;
            penalty += wv * wv;
        }
        total / n + 0.5 * self.lambda * penalty
    }
}

fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    super::dot(a, b)
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
