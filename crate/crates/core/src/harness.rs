//! Episodic Monte Carlo experiments.
//!
//! Every task `i` draws from its own RNG seeded with
//! `derive_task_seed(seed, i)`, and results are reduced in task order, so
//! every report is a function of the config alone. On a Gaussian source the
//! train split is drawn first and scored in closed form.

use std::sync::Arc;

use crate::classify::{evaluate, fit_logreg, fit_ncc, FitConfig, LinearClassifier};
use crate::data::{derive_task_seed, rng_from_seed, sample_episode, LabeledFeatureSet, SeedSpec};
use crate::error::{Error, Result};
use crate::gaussian::{self, classifier_error_closed_form, GaussianTaskSpec, TestClass, ViewConfig};
use crate::runner::{map_tasks, mean_and_std_error};
use crate::select::{rank_dimensions, scale_columns, soft_mask_scales, MaskSpec};
use crate::stats::{
    class_stats, importance_binary, importance_estimated, importance_over_classes, ClassStats, ImportanceVector,
    Provenance, VariancePolicy,
};
use crate::storage::{Cell, ResultsTable};

#[derive(Debug, Clone)]
pub enum Source {
    Gaussian(GaussianTaskSpec),
    Features(Arc<LabeledFeatureSet>),
}

impl Source {
    pub fn dim(&self) -> usize {
        match self {
            Source::Gaussian(s) => s.dim(),
            Source::Features(d) => d.dim(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjust {
    None,
    Oracle,
    Estimated,
    EstimatedAugmented,
}

impl Adjust {
    pub fn as_str(self) -> &'static str {
        match self {
            Adjust::None => "none",
            Adjust::Oracle => "oracle",
            Adjust::Estimated => "estimated",
            Adjust::EstimatedAugmented => "estimated-augmented",
        }
    }
}

/// Which importance orders the dimensions for the hard mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankBy {
    Oracle,
    Estimated,
    /// Dimension order as stored.
    Identity,
}

impl RankBy {
    pub fn as_str(self) -> &'static str {
        match self {
            RankBy::Oracle => "oracle",
            RankBy::Estimated => "estimated",
            RankBy::Identity => "identity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierChoice {
    Ncc,
    Logreg,
}

impl ClassifierChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierChoice::Ncc => "ncc",
            ClassifierChoice::Logreg => "logreg",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: Source,
    pub way: usize,
    pub shot: usize,
    pub query: usize,
    pub tasks: usize,
    pub keep_counts: Vec<usize>,
    pub adjust: Adjust,
    pub rank_by: RankBy,
    pub classifier: ClassifierChoice,
    /// Simulated views per train sample (Gaussian source only).
    pub views: usize,
    pub rho: f64,
    pub view_bias: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub workers: usize,
    pub fit: FitConfig,
}

/// Powers of two below `dim`, then `dim`.
pub fn default_keep_counts(dim: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |k| k.checked_mul(2))
        .take_while(|&k| k < dim)
        .collect();
    out.push(dim);
    out
}

impl ExperimentConfig {
    pub fn new(source: Source) -> Self {
        let dim = source.dim();
        Self {
            source,
            way: 2,
            shot: 1,
            query: 15,
            tasks: 2000,
            keep_counts: default_keep_counts(dim),
            adjust: Adjust::None,
            rank_by: RankBy::Oracle,
            classifier: ClassifierChoice::Ncc,
            views: 5,
            rho: 0.5,
            view_bias: 0.0,
            epsilon: 1e-6,
            seed: 0,
            workers: 1,
            fit: FitConfig::default(),
        }
    }

    pub fn gaussian(spec: GaussianTaskSpec) -> Self {
        Self::new(Source::Gaussian(spec))
    }

    pub fn features(data: LabeledFeatureSet) -> Self {
        Self::new(Source::Features(Arc::new(data)))
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks == 0 {
            return Err(Error::Validation("tasks must be at least 1".into()));
        }
        if self.shot == 0 || self.query == 0 {
            return Err(Error::Validation("shots and query must be at least 1".into()));
        }
        if self.way < 2 {
            return Err(Error::Validation(format!("way must be at least 2, got {}", self.way)));
        }
        if let Source::Gaussian(_) = self.source {
            if self.way != 2 {
                return Err(Error::Validation(format!("the Gaussian bench is 2-way, got way {}", self.way)));
            }
        }
        let dim = self.dim();
        if self.keep_counts.is_empty() {
            return Err(Error::Validation("at least one keep count is required".into()));
        }
        if let Some(&k) = self.keep_counts.iter().find(|&&k| k == 0 || k > dim) {
            return Err(Error::Validation(format!("keep value {k} outside [1, {dim}]")));
        }
        if self.keep_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("keep counts must be ascending and unique".into()));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() || !self.view_bias.is_finite() {
            return Err(Error::Validation("rho must be finite and >= 0".into()));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Validation("epsilon must be finite and >= 0".into()));
        }
        if self.uses_views() {
            match &self.source {
                Source::Gaussian(_) if self.views == 0 => {
                    return Err(Error::Validation("augmented estimation needs at least one view".into()));
                }
                Source::Features(d) if !d.has_groups() => {
                    return Err(Error::Validation("augmented estimation needs a feature file with view groups".into()));
                }
                _ => {}
            }
        }
        self.fit.validate()
    }

    fn uses_views(&self) -> bool {
        self.adjust == Adjust::EstimatedAugmented
    }

    /// Key-value echo of every setting, for result metadata.
    pub fn echo(&self) -> Vec<(String, String)> {
        let source = match &self.source {
            Source::Gaussian(_) => "gaussian".to_string(),
            Source::Features(d) => format!("features n={} dim={} classes={}", d.n_samples(), d.dim(), d.n_classes()),
        };
        let keep: Vec<String> = self.keep_counts.iter().map(|k| k.to_string()).collect();
        vec![
            ("source".into(), source),
            ("way".into(), self.way.to_string()),
            ("shot".into(), self.shot.to_string()),
            ("query".into(), self.query.to_string()),
            ("tasks".into(), self.tasks.to_string()),
            ("keep".into(), keep.join(",")),
            ("adjust".into(), self.adjust.as_str().into()),
            ("rank_by".into(), self.rank_by.as_str().into()),
            ("classifier".into(), self.classifier.as_str().into()),
            ("views".into(), self.views.to_string()),
            ("rho".into(), self.rho.to_string()),
            ("view_bias".into(), self.view_bias.to_string()),
            ("epsilon".into(), self.epsilon.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("l2_lambda".into(), self.fit.l2_lambda.map_or("1/n".into(), |l| l.to_string())),
            ("max_iters".into(), self.fit.max_iters.to_string()),
            ("tolerance".into(), self.fit.tolerance.to_string()),
        ]
    }
}

// Shared per-run state: population statistics of a feature file.
struct Context {
    full_stats: Option<ClassStats>,
}

impl Context {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let full_stats = match &cfg.source {
            Source::Gaussian(_) => None,
            Source::Features(d) => Some(class_stats(d, VariancePolicy::for_counts(&d.class_counts()))?),
        };
        Ok(Self { full_stats })
    }
}

// One drawn task.
struct Task {
    train: LabeledFeatureSet,
    views: Option<LabeledFeatureSet>,
    query: Option<LabeledFeatureSet>,
    oracle: (ImportanceVector, ClassStats),
}

fn gaussian_stats(spec: &GaussianTaskSpec) -> ClassStats {
    let mut means = spec.mean_a().to_vec();
    means.extend_from_slice(spec.mean_b());
    let mut stds = spec.std().to_vec();
    stds.extend_from_slice(spec.std());
    ClassStats::from_parts(2, spec.dim(), means, stds, vec![0, 0]).expect("valid spec")
}

fn task_seed(cfg: &ExperimentConfig, i: u64) -> u64 {
    derive_task_seed(SeedSpec {
        base_seed: cfg.seed,
        task_index: i,
    })
}

fn draw_task(cfg: &ExperimentConfig, ctx: &Context, i: u64, with_views: bool) -> Result<Task> {
    let seed = task_seed(cfg, i);
    match &cfg.source {
        Source::Gaussian(spec) => {
            let mut rng = rng_from_seed(seed);
            let train = gaussian::sample_rows(spec, cfg.shot, &mut rng);
            let views = if with_views {
                let vc = ViewConfig {
                    views: cfg.views,
                    rho: cfg.rho,
                    bias: cfg.view_bias,
                };
                Some(gaussian::add_views(spec, &train, &vc, &mut rng)?)
            } else {
                None
            };
            Ok(Task {
                train,
                views,
                query: None,
                oracle: (spec.oracle_importance(), gaussian_stats(spec)),
            })
        }
        Source::Features(data) => {
            let ep = sample_episode(data, cfg.way, cfg.shot, cfg.query, seed)?;
            let full = ctx.full_stats.as_ref().expect("feature context");
            let stats = full.subset(&ep.classes)?;
            let classes: Vec<usize> = (0..cfg.way).collect();
            let omega = importance_over_classes(&stats, &classes, Provenance::Oracle)?;
            let views = (with_views && ep.train.has_groups()).then(|| ep.train.clone());
            Ok(Task {
                train: ep.base_train(),
                views,
                query: Some(ep.query),
                oracle: (omega, stats),
            })
        }
    }
}

fn estimate(pool: &LabeledFeatureSet) -> Result<(ImportanceVector, ClassStats)> {
    let policy = VariancePolicy::for_counts(&pool.class_counts());
    Ok((importance_estimated(pool, policy)?, class_stats(pool, policy)?))
}

fn fit(cfg: &ExperimentConfig, train: &LabeledFeatureSet) -> Result<LinearClassifier> {
    match cfg.classifier {
        ClassifierChoice::Ncc => fit_ncc(train),
        ClassifierChoice::Logreg => fit_logreg(train, &cfg.fit),
    }
}

// Test error of one task at every keep count, for the given adjustment.
fn task_errors(cfg: &ExperimentConfig, task: &Task, keep_counts: &[usize], adjust: Adjust) -> Result<Vec<f64>> {
    let dim = cfg.dim();
    let pool = match adjust {
        Adjust::EstimatedAugmented => task
            .views
            .as_ref()
            .ok_or_else(|| Error::Precondition("augmented estimation needs views".into()))?,
        _ => &task.train,
    };
    let estimated = match (cfg.rank_by, adjust) {
        (RankBy::Estimated, _) | (_, Adjust::Estimated | Adjust::EstimatedAugmented) => Some(estimate(pool)?),
        _ => None,
    };
    let ranking = match cfg.rank_by {
        RankBy::Oracle => rank_dimensions(&task.oracle.0),
        RankBy::Estimated => rank_dimensions(&estimated.as_ref().expect("estimated").0),
        RankBy::Identity => (0..dim).collect(),
    };
    let adjust_source = match adjust {
        Adjust::None => None,
        Adjust::Oracle => Some(&task.oracle),
        Adjust::Estimated | Adjust::EstimatedAugmented => estimated.as_ref(),
    };

    let mut errors = Vec::with_capacity(keep_counts.len());
    for &keep in keep_counts {
        let mask = MaskSpec::new(keep, ranking.clone())?.indicator();
        let scales = match adjust_source {
            None => mask,
            Some((omega, stats)) => {
                let masked_omega = ImportanceVector {
                    values: omega.values.iter().zip(&mask).map(|(w, m)| w * m).collect(),
                    ..omega.clone()
                };
                let masked_train = scale_columns(&task.train, &mask)?;
                let s = soft_mask_scales(&masked_omega, stats, cfg.epsilon, &masked_train)?;
                if s.degenerate {
                    mask
                } else {
                    s.values
                }
            }
        };
        let train = scale_columns(&task.train, &scales)?;
        let clf = fit(cfg, &train)?;
        let err = match (&cfg.source, &task.query) {
            (Source::Gaussian(spec), _) => {
                classifier_error_closed_form(spec, &clf.compose_diagonal(&scales)?, TestClass::Balanced)?
            }
            (Source::Features(_), Some(q)) => evaluate(&clf, &scale_columns(q, &scales)?)?,
            (Source::Features(_), None) => unreachable!("feature tasks carry a query split"),
        };
        errors.push(err);
    }
    Ok(errors)
}

fn run_errors(cfg: &ExperimentConfig, keep_counts: &[usize], adjusts: &[Adjust]) -> Result<Vec<Vec<Vec<f64>>>> {
    cfg.validate()?;
    let ctx = Context::new(cfg)?;
    let with_views = adjusts.contains(&Adjust::EstimatedAugmented);
    map_tasks(cfg.tasks, cfg.workers, |i| {
        let task = draw_task(cfg, &ctx, i, with_views)?;
        adjusts.iter().map(|&a| task_errors(cfg, &task, keep_counts, a)).collect()
    })
}

/// One point of a curve over keep counts, shots or ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub x: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub n_tasks: usize,
}

pub type SweepCurve = Vec<SweepPoint>;

fn summarise(per_task: &[Vec<f64>], xs: &[usize]) -> SweepCurve {
    xs.iter()
        .enumerate()
        .map(|(j, &x)| {
            let col: Vec<f64> = per_task.iter().map(|t| t[j]).collect();
            let (mean_error, std_error) = mean_and_std_error(&col);
            SweepPoint {
                x,
                mean_error,
                std_error,
                n_tasks: col.len(),
            }
        })
        .collect()
}

/// Test error against the number of kept dimensions.
pub fn run_mask_sweep(cfg: &ExperimentConfig) -> Result<SweepCurve> {
    let errs = run_errors(cfg, &cfg.keep_counts, &[cfg.adjust])?;
    let per_task: Vec<Vec<f64>> = errs.into_iter().map(|mut t| t.remove(0)).collect();
    Ok(summarise(&per_task, &cfg.keep_counts))
}

/// One cell of the two-dimensional model's reference table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1Cell {
    pub shot: usize,
    pub classifier: ClassifierChoice,
    pub dims: usize,
    /// Percent.
    pub accuracy: f64,
    pub std_error: f64,
    pub n_tasks: usize,
}

/// The 1-shot (nearest centroid, equal to logistic at one shot) and 500-shot
/// (logistic and nearest centroid) accuracies on the first and on both
/// dimensions.
pub fn run_table1(spec: &GaussianTaskSpec, tasks: usize, seed: u64, workers: usize, fit: FitConfig) -> Result<Vec<Table1Cell>> {
    if spec.dim() != 2 {
        return Err(Error::Validation(format!("table1 needs a 2-dim spec, got {}", spec.dim())));
    }
    let mut cells = Vec::new();
    for (shot, classifier) in [
        (1, ClassifierChoice::Ncc),
        (500, ClassifierChoice::Logreg),
        (500, ClassifierChoice::Ncc),
    ] {
        let cfg = ExperimentConfig {
            shot,
            tasks,
            seed,
            workers,
            fit,
            classifier,
            rank_by: RankBy::Identity,
            keep_counts: vec![1, 2],
            ..ExperimentConfig::gaussian(spec.clone())
        };
        for p in run_mask_sweep(&cfg)? {
            cells.push(Table1Cell {
                shot,
                classifier,
                dims: p.x,
                accuracy: 100.0 * (1.0 - p.mean_error),
                std_error: 100.0 * p.std_error,
                n_tasks: p.n_tasks,
            });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub way: usize,
    pub shot: usize,
    pub full_error: f64,
    pub full_std_error: f64,
    pub best_error: f64,
    pub best_std_error: f64,
    pub best_keep: usize,
}

impl GridCell {
    /// Full-feature error minus best-mask error.
    pub fn gap(&self) -> f64 {
        self.full_error - self.best_error
    }
}

/// Full-feature error and best masked error over a way-shot grid.
pub fn run_wayshot_grid(cfg: &ExperimentConfig, ways: &[usize], shots: &[usize]) -> Result<Vec<GridCell>> {
    let dim = cfg.dim();
    let mut keep = cfg.keep_counts.clone();
    if keep.last() != Some(&dim) {
        keep.push(dim);
    }
    let mut out = Vec::new();
    for &way in ways {
        for &shot in shots {
            let c = ExperimentConfig {
                way,
                shot,
                keep_counts: keep.clone(),
                ..cfg.clone()
            };
            let curve = run_mask_sweep(&c)?;
            let full = *curve.last().expect("non-empty keep counts");
            let best = curve
                .iter()
                .copied()
                .reduce(|a, b| if b.mean_error < a.mean_error { b } else { a })
                .expect("non-empty keep counts");
            out.push(GridCell {
                way,
                shot,
                full_error: full.mean_error,
                full_std_error: full.std_error,
                best_error: best.mean_error,
                best_std_error: best.std_error,
                best_keep: best.x,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiEstimator {
    /// Fixed unit std at one shot, sample std otherwise.
    Raw,
    /// Base samples pooled with their views.
    Augmented,
    Oracle,
}

impl FiEstimator {
    pub fn as_str(self) -> &'static str {
        match self {
            FiEstimator::Raw => "raw",
            FiEstimator::Augmented => "augmented",
            FiEstimator::Oracle => "oracle",
        }
    }
}

/// Mean and std of a statistic at one index (a rank or a dimension).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStat {
    pub index: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiQuality {
    pub shot: usize,
    pub estimator: FiEstimator,
    /// Mean oracle importance at each oracle rank.
    pub oracle: Vec<f64>,
    /// Estimated importance at each oracle rank, across tasks.
    pub by_rank: Vec<AggregateStat>,
    /// Mean over ranks of the per-rank std.
    pub mean_std: f64,
}

/// How well estimated importance tracks the oracle, by oracle rank.
pub fn run_fi_quality(cfg: &ExperimentConfig, shots: &[usize], estimators: &[FiEstimator]) -> Result<Vec<FiQuality>> {
    let dim = cfg.dim();
    let mut out = Vec::new();
    for &shot in shots {
        let c = ExperimentConfig {
            shot,
            adjust: Adjust::None,
            ..cfg.clone()
        };
        c.validate()?;
        let with_views = estimators.contains(&FiEstimator::Augmented);
        if with_views {
            ExperimentConfig {
                adjust: Adjust::EstimatedAugmented,
                ..c.clone()
            }
            .validate()?;
        }
        let ctx = Context::new(&c)?;
        let per_task = map_tasks(c.tasks, c.workers, |i| {
            let task = draw_task(&c, &ctx, i, with_views)?;
            let order = rank_dimensions(&task.oracle.0);
            let oracle: Vec<f64> = order.iter().map(|&k| task.oracle.0.values[k]).collect();
            let mut rows = Vec::with_capacity(estimators.len());
            for est in estimators {
                let w = match est {
                    FiEstimator::Raw => estimate(&task.train)?.0,
                    FiEstimator::Augmented => estimate(task.views.as_ref().expect("views drawn"))?.0,
                    FiEstimator::Oracle => task.oracle.0.clone(),
                };
                rows.push(order.iter().map(|&k| w.values[k]).collect::<Vec<f64>>());
            }
            Ok((oracle, rows))
        })?;
        let n = per_task.len() as f64;
        let oracle_mean: Vec<f64> = (0..dim).map(|r| per_task.iter().map(|t| t.0[r]).sum::<f64>() / n).collect();
        for (e, &est) in estimators.iter().enumerate() {
            let by_rank: Vec<AggregateStat> = (0..dim)
                .map(|r| {
                    let col: Vec<f64> = per_task.iter().map(|t| t.1[e][r]).collect();
                    let mean = col.iter().sum::<f64>() / n;
                    // shifted by the first value so identical columns give exactly 0
                    let var = if col.len() > 1 {
                        let d: Vec<f64> = col.iter().map(|v| v - col[0]).collect();
                        let dm = d.iter().sum::<f64>() / n;
                        d.iter().map(|v| (v - dm).powi(2)).sum::<f64>() / (n - 1.0)
                    } else {
                        0.0
                    };
                    AggregateStat {
                        index: r,
                        mean,
                        std: var.sqrt(),
                    }
                })
                .collect();
            let mean_std = by_rank.iter().map(|a| a.std).sum::<f64>() / dim as f64;
            out.push(FiQuality {
                shot,
                estimator: est,
                oracle: oracle_mean.clone(),
                by_rank,
                mean_std,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopkReport {
    pub k: usize,
    /// Binary tasks counted (one per class pair).
    pub n_tasks: usize,
    /// Per dimension: tasks where it is among the top-k by importance.
    pub fi_counts: Vec<usize>,
    /// Per dimension: tasks where it is among the top-k by mean |feature|
    /// over the task's two classes.
    pub magnitude_counts: Vec<usize>,
}

/// Top-k membership counts over every class pair of a labelled set.
pub fn run_topk_frequency(data: &LabeledFeatureSet, k: usize) -> Result<TopkReport> {
    let (c_n, dim) = (data.n_classes(), data.dim());
    if c_n < 2 {
        return Err(Error::Precondition("top-k frequency needs at least 2 classes".into()));
    }
    if k == 0 || k > dim {
        return Err(Error::Validation(format!("k = {k} outside [1, {dim}]")));
    }
    let counts = data.class_counts();
    let stats = class_stats(data, VariancePolicy::for_counts(&counts))?;
    let mut abs_sums = vec![0.0; c_n * dim];
    for (row, &l) in data.rows().zip(data.labels()) {
        for (s, x) in abs_sums[l * dim..(l + 1) * dim].iter_mut().zip(row) {
            *s += x.abs();
        }
    }
    let mut fi_counts = vec![0usize; dim];
    let mut magnitude_counts = vec![0usize; dim];
    let mut n_tasks = 0;
    for a in 0..c_n {
        for b in a + 1..c_n {
            n_tasks += 1;
            let w = importance_binary(&stats, a, b, Provenance::Oracle)?;
            for &d in &rank_dimensions(&w)[..k] {
                fi_counts[d] += 1;
            }
            let n = (counts[a] + counts[b]) as f64;
            let mag: Vec<f64> = (0..dim)
                .map(|d| (abs_sums[a * dim + d] + abs_sums[b * dim + d]) / n)
                .collect();
            let mag = ImportanceVector::new(mag, Provenance::Oracle)?;
            for &d in &rank_dimensions(&mag)[..k] {
                magnitude_counts[d] += 1;
            }
        }
    }
    Ok(TopkReport {
        k,
        n_tasks,
        fi_counts,
        magnitude_counts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustReport {
    pub n_tasks: usize,
    /// Percent accuracies.
    pub baseline: f64,
    pub baseline_se: f64,
    pub adjusted: f64,
    pub adjusted_se: f64,
    /// Paired difference `adjusted - baseline`.
    pub delta: f64,
    pub delta_se: f64,
}

/// Paired accuracy of plain probing and of probing after the soft mask, on
/// all dimensions.
pub fn run_adjust_eval(cfg: &ExperimentConfig) -> Result<AdjustReport> {
    if cfg.adjust == Adjust::None {
        return Err(Error::Validation("adjust-eval needs an adjustment other than none".into()));
    }
    let dim = cfg.dim();
    let errs = run_errors(cfg, &[dim], &[Adjust::None, cfg.adjust])?;
    let base: Vec<f64> = errs.iter().map(|t| 100.0 * (1.0 - t[0][0])).collect();
    let adj: Vec<f64> = errs.iter().map(|t| 100.0 * (1.0 - t[1][0])).collect();
    let diff: Vec<f64> = adj.iter().zip(&base).map(|(a, b)| a - b).collect();
    let (baseline, baseline_se) = mean_and_std_error(&base);
    let (adjusted, adjusted_se) = mean_and_std_error(&adj);
    let (delta, delta_se) = mean_and_std_error(&diff);
    Ok(AdjustReport {
        n_tasks: errs.len(),
        baseline,
        baseline_se,
        adjusted,
        adjusted_se,
        delta,
        delta_se,
    })
}

fn table(columns: &[&str], rows: Vec<Vec<Cell>>) -> ResultsTable {
    ResultsTable::new(columns.iter().map(|c| c.to_string()).collect(), rows).expect("rectangular by construction")
}

pub fn table1_table(cells: &[Table1Cell]) -> ResultsTable {
    let rows = cells
        .iter()
        .map(|c| {
            vec![
                Cell::Int(c.shot as i64),
                Cell::Text(c.classifier.as_str().into()),
                Cell::Int(c.dims as i64),
                Cell::Num(c.accuracy),
                Cell::Num(c.std_error),
                Cell::Int(c.n_tasks as i64),
            ]
        })
        .collect();
    table(&["shot", "classifier", "dims", "accuracy", "std_error", "n_tasks"], rows)
}

pub fn sweep_table(x_name: &str, curve: &[SweepPoint]) -> ResultsTable {
    let rows = curve
        .iter()
        .map(|p| {
            vec![
                Cell::Int(p.x as i64),
                Cell::Num(p.mean_error),
                Cell::Num(p.std_error),
                Cell::Int(p.n_tasks as i64),
            ]
        })
        .collect();
    table(&[x_name, "mean_error", "std_error", "n_tasks"], rows)
}

pub fn grid_table(cells: &[GridCell]) -> ResultsTable {
    let rows = cells
        .iter()
        .map(|c| {
            vec![
                Cell::Int(c.way as i64),
                Cell::Int(c.shot as i64),
                Cell::Num(c.full_error),
                Cell::Num(c.full_std_error),
                Cell::Num(c.best_error),
                Cell::Num(c.best_std_error),
                Cell::Int(c.best_keep as i64),
                Cell::Num(c.gap()),
            ]
        })
        .collect();
    table(
        &["way", "shot", "full_error", "full_std_error", "best_error", "best_std_error", "best_keep", "gap"],
        rows,
    )
}

pub fn fi_quality_table(results: &[FiQuality]) -> ResultsTable {
    let mut rows = Vec::new();
    for q in results {
        for (a, o) in q.by_rank.iter().zip(&q.oracle) {
            rows.push(vec![
                Cell::Int(q.shot as i64),
                Cell::Text(q.estimator.as_str().into()),
                Cell::Int(a.index as i64),
                Cell::Num(*o),
                Cell::Num(a.mean),
                Cell::Num(a.std),
            ]);
        }
    }
    table(&["shot", "estimator", "rank", "oracle_fi", "mean_fi", "std_fi"], rows)
}

pub fn topk_table(r: &TopkReport) -> ResultsTable {
    let rows = (0..r.fi_counts.len())
        .map(|d| {
            vec![
                Cell::Int(d as i64),
                Cell::Int(r.fi_counts[d] as i64),
                Cell::Int(r.magnitude_counts[d] as i64),
                Cell::Int(r.n_tasks as i64),
            ]
        })
        .collect();
    table(&["dim", "fi_count", "magnitude_count", "n_tasks"], rows)
}

pub fn adjust_table(r: &AdjustReport) -> ResultsTable {
    let rows = vec![
        vec![Cell::Text("baseline".into()), Cell::Num(r.baseline), Cell::Num(r.baseline_se), Cell::Int(r.n_tasks as i64)],
        vec![Cell::Text("adjusted".into()), Cell::Num(r.adjusted), Cell::Num(r.adjusted_se), Cell::Int(r.n_tasks as i64)],
        vec![Cell::Text("delta".into()), Cell::Num(r.delta), Cell::Num(r.delta_se), Cell::Int(r.n_tasks as i64)],
    ];
    table(&["arm", "accuracy", "std_error", "n_tasks"], rows)
}

pub fn theorem_table(reports: &[gaussian::TheoremReport]) -> ResultsTable {
    let opt = |v: Option<f64>| v.map_or(Cell::Text(String::new()), Cell::Num);
    let rows = reports
        .iter()
        .map(|r| {
            let mean = |v: &[f64]| if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) };
            vec![
                Cell::Int(r.shots as i64),
                Cell::Text(r.conditions_hold.iter().map(|c| if *c { "1" } else { "0" }).collect::<Vec<_>>().join(";")),
                Cell::Text(r.margins.iter().map(|m| format!("{m:.16e}")).collect::<Vec<_>>().join(";")),
                opt(r.guarantee_probability),
                opt(r.empirical_frequency),
                opt(r.balanced_frequency),
                opt(mean(&r.errors_1d)),
                opt(mean(&r.errors_2d)),
                opt(r.median_gap),
                opt(r.bayes_component),
                Cell::Int(r.errors_1d.len() as i64),
            ]
        })
        .collect();
    table(
        &[
            "shots",
            "conditions",
            "margins",
            "guarantee",
            "frequency",
            "balanced_frequency",
            "mean_error_1d",
            "mean_error_2d",
            "median_gap",
            "bayes_component",
            "n_draws",
        ],
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(spec: GaussianTaskSpec) -> ExperimentConfig {
        ExperimentConfig {
            tasks: 50,
            seed: 3,
            ..ExperimentConfig::gaussian(spec)
        }
    }

    #[test]
    fn default_keep_counts_are_powers_of_two_plus_dim() {
        assert_eq!(default_keep_counts(2), vec![1, 2]);
        assert_eq!(default_keep_counts(12), vec![1, 2, 4, 8, 12]);
        assert_eq!(default_keep_counts(16), vec![1, 2, 4, 8, 16]);
        assert_eq!(default_keep_counts(1), vec![1]);
    }

    #[test]
    fn validation_names_bad_keep_values() {
        let mut cfg = small(GaussianTaskSpec::two_dim());
        cfg.keep_counts = vec![1, 3];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains('3'), "{err}");
        cfg.keep_counts = vec![2, 1];
        assert!(cfg.validate().is_err());
        cfg.keep_counts = vec![1, 2];
        cfg.way = 3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn full_keep_without_adjust_equals_plain_probing() {
        let cfg = ExperimentConfig {
            keep_counts: vec![2],
            ..small(GaussianTaskSpec::two_dim())
        };
        let sweep = run_mask_sweep(&cfg).unwrap();
        let ctx = Context::new(&cfg).unwrap();
        let plain: Vec<f64> = (0..cfg.tasks as u64)
            .map(|i| {
                let t = draw_task(&cfg, &ctx, i, false).unwrap();
                let clf = fit_ncc(&t.train).unwrap();
                classifier_error_closed_form(&GaussianTaskSpec::two_dim(), &clf, TestClass::Balanced).unwrap()
            })
            .collect();
        assert_eq!(sweep[0].mean_error, mean_and_std_error(&plain).0);
    }

    #[test]
    fn workers_do_not_change_results() {
        let mut cfg = small(GaussianTaskSpec::soft_mask_64());
        cfg.adjust = Adjust::EstimatedAugmented;
        let one = run_adjust_eval(&cfg).unwrap();
        cfg.workers = 4;
        assert_eq!(run_adjust_eval(&cfg).unwrap(), one);
    }

    #[test]
    fn oracle_estimator_has_no_spread() {
        let cfg = small(GaussianTaskSpec::fi_bench());
        let q = run_fi_quality(&cfg, &[1], &[FiEstimator::Oracle]).unwrap();
        assert!(q[0].by_rank.iter().all(|a| a.std == 0.0));
        assert_eq!(q[0].mean_std, 0.0);
    }

    #[test]
    fn two_shot_raw_estimates_spread_more_than_one_shot_fixed() {
        let spec = GaussianTaskSpec::new(vec![-0.5; 8], vec![0.5; 8], vec![1.0; 8]).unwrap();
        let cfg = ExperimentConfig {
            tasks: 500,
            ..small(spec)
        };
        let q = run_fi_quality(&cfg, &[1, 2], &[FiEstimator::Raw]).unwrap();
        assert!(q[1].mean_std > q[0].mean_std, "{} vs {}", q[1].mean_std, q[0].mean_std);
    }

    fn topk_fixture() -> LabeledFeatureSet {
        // Four classes; dimension 7 separates every pair best; dimension 3
        // is a large constant.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..4usize {
            for i in 0..6usize {
                let mut r = vec![0.0; 10];
                for (d, v) in r.iter_mut().enumerate() {
                    *v = ((i * 7 + d * 3) % 5) as f64 * 0.1;
                }
                r[7] = 10.0 * c as f64 + (i % 2) as f64 * 0.1;
                r[3] = 1000.0;
                r[5] = c as f64 * 0.5 + (i % 3) as f64;
                rows.push(r);
                labels.push(c);
            }
        }
        LabeledFeatureSet::from_rows(&rows, labels, 4).unwrap()
    }

    #[test]
    fn topk_examples() {
        let data = topk_fixture();
        let r = run_topk_frequency(&data, 1).unwrap();
        assert_eq!(r.n_tasks, 6);
        assert_eq!(r.fi_counts[7], 6);
        assert_eq!(r.magnitude_counts[3], 6);
        assert_eq!(r.fi_counts[3], 0);
        let all = run_topk_frequency(&data, 10).unwrap();
        assert!(all.fi_counts.iter().chain(&all.magnitude_counts).all(|&c| c == 6));
    }

    #[test]
    fn uniform_importance_adjustment_is_a_global_rescale() {
        let spec = GaussianTaskSpec::new(vec![1.0; 6], vec![3.0; 6], vec![1.0; 6]).unwrap();
        let cfg = ExperimentConfig {
            adjust: Adjust::Oracle,
            ..small(spec)
        };
        let r = run_adjust_eval(&cfg).unwrap();
        assert!(r.delta.abs() < 1e-9, "{}", r.delta);
    }

    #[test]
    fn feature_source_runs_end_to_end() {
        let mut rng = rng_from_seed(1);
        let spec = GaussianTaskSpec::new(vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![1.0; 3]).unwrap();
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for c in 0..3usize {
            let block = gaussian::sample_rows(&spec, 20, &mut rng);
            for (row, &l) in block.rows().zip(block.labels()) {
                if l == 0 {
                    feats.extend(row.iter().map(|v| v + c as f64));
                    labels.push(c);
                }
            }
        }
        let data = LabeledFeatureSet::new(feats, 3, labels, 3, None).unwrap();
        let cfg = ExperimentConfig {
            way: 3,
            shot: 2,
            query: 5,
            tasks: 20,
            ..ExperimentConfig::features(data)
        };
        let curve = run_mask_sweep(&cfg).unwrap();
        assert_eq!(curve.len(), 3);
        assert!(curve.iter().all(|p| (0.0..=1.0).contains(&p.mean_error)));
    }
}
