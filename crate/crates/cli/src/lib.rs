//! Command line front end. [`run`] parses arguments, runs one subcommand and
//! returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage error (unknown subcommand or flag, bad flag value) |
//! | 3 | invalid configuration or input data |
//! | 4 | I/O failure |
//!
//! Every result-producing subcommand writes `--out` plus a metadata echo:
//! a `<out>.meta.json` sidecar for CSV, or a `metadata` object inside JSON.
//! `--seed` defaults to 0 and is always echoed. With `--frozen-meta` the
//! metadata leaves out the worker count and the creation time, so repeated
//! runs give byte-identical files.
//!
//! `--config FILE` reads `flag = value` lines (long flag names without the
//! dashes) as defaults for the subcommand; flags on the command line win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use featred::classify::FitConfig;
use featred::gaussian::{self, GaussianTaskSpec};
use featred::harness::{self, Adjust, ClassifierChoice, ExperimentConfig, FiEstimator, RankBy};
use featred::storage::kv::KvConfig;
use featred::storage::{self, Cell, Format, ResultsTable};
use featred::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "featred",
    version,
    about = "Feature-importance based feature selection for few-shot linear probing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Accuracy of the two-dimensional model at 1 and 500 shots, on one and two dims.
    Table1(Table1Args),
    /// Conditions and probability bound of the nearest-centroid redundancy theorem.
    Thm1Check(TheoremArgs),
    /// Monte Carlo frequency of the nearest-centroid redundancy event.
    Thm1Verify(TheoremArgs),
    /// Median test-error gap of exact 0-1 ERM on two dims versus one.
    Thm2Gap(TheoremArgs),
    /// Test error against the number of kept dimensions.
    MaskSweep(ExperimentArgs),
    /// Full-feature and best masked error over a way-shot grid.
    WayshotGrid(ExperimentArgs),
    /// Per-rank mean and spread of estimated importances.
    FiQuality(ExperimentArgs),
    /// How often each dimension is top-k by importance and by magnitude.
    TopkFreq(TopkArgs),
    /// Accuracy with and without the soft mask.
    AdjustEval(ExperimentArgs),
    /// Validate an FFSB feature file and print its header.
    FfsbInfo(InfoArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Table1(_) => "table1",
            Command::Thm1Check(_) => "thm1-check",
            Command::Thm1Verify(_) => "thm1-verify",
            Command::Thm2Gap(_) => "thm2-gap",
            Command::MaskSweep(_) => "mask-sweep",
            Command::WayshotGrid(_) => "wayshot-grid",
            Command::FiQuality(_) => "fi-quality",
            Command::TopkFreq(_) => "topk-freq",
            Command::AdjustEval(_) => "adjust-eval",
            Command::FfsbInfo(_) => "ffsb-info",
        }
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Results file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Leave the worker count and creation time out of the metadata.
    #[arg(long)]
    frozen_meta: bool,
    /// `flag = value` file of defaults for this subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExecArgs {
    /// Base seed; task i uses a seed derived from (seed, i).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
}

#[derive(Args, Debug)]
struct Table1Args {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    exec: ExecArgs,
    /// Preset name or spec file.
    #[arg(long, default_value = "two-dim")]
    spec: String,
    #[arg(long, default_value_t = 2000)]
    tasks: usize,
}

#[derive(Args, Debug)]
struct TheoremArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    exec: ExecArgs,
    /// Preset name or spec file [default: thm1 for thm1-*, two-dim for thm2-gap].
    #[arg(long)]
    spec: Option<String>,
    /// Shots per class [default: 400 for thm1-*, 4,16,64,256 for thm2-gap].
    #[arg(long, value_delimiter = ',')]
    shots: Option<Vec<usize>>,
    /// Monte Carlo draws per shot count [default: 2000 for thm1-verify, 200 for thm2-gap].
    #[arg(long)]
    tasks: Option<usize>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    exec: ExecArgs,
    /// Gaussian preset name or spec file.
    #[arg(long, conflicts_with = "features")]
    spec: Option<String>,
    /// FFSB feature file to sample episodes from.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    tasks: usize,
    #[arg(long, value_enum, default_value_t = ClassifierArg::Ncc)]
    classifier: ClassifierArg,
    /// Shots per class; several values give one block of results each.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize])]
    shots: Vec<usize>,
    /// Classes per task; only wayshot-grid uses more than one value.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize])]
    ways: Vec<usize>,
    /// Query samples per class (feature files only).
    #[arg(long, default_value_t = 15)]
    query: usize,
    /// Simulated views per train sample (Gaussian source).
    #[arg(long, default_value_t = 5)]
    views: usize,
    /// View spread relative to the class std.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Kept dimension counts [default: powers of two up to the dimension].
    #[arg(long, value_delimiter = ',')]
    keep: Option<Vec<usize>>,
    /// Soft-mask adjustment [default: estimated-augmented for adjust-eval, none otherwise].
    #[arg(long, value_enum)]
    adjust: Option<AdjustArg>,
    /// Importance that orders dimensions for the hard mask.
    #[arg(long, value_enum, default_value_t = RankArg::Oracle)]
    rank_by: RankArg,
    /// Soft-mask denominator offset.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// L2 penalty for logistic probing [default: 1/n].
    #[arg(long)]
    l2: Option<f64>,
}

#[derive(Args, Debug)]
struct TopkArgs {
    #[command(flatten)]
    output: OutputArgs,
    /// FFSB feature file.
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
}

#[derive(Args, Debug)]
struct InfoArgs {
    /// FFSB feature file.
    #[arg(long)]
    features: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ClassifierArg {
    Ncc,
    Logreg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AdjustArg {
    None,
    Oracle,
    Estimated,
    EstimatedAugmented,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RankArg {
    Oracle,
    Estimated,
    Identity,
}

// Failure of a subcommand after argument parsing.
#[derive(Debug)]
enum Failure {
    Validation(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// Runs the command line `argv` (including the program name).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            EXIT_VALIDATION
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            EXIT_IO
        }
    }
}

fn command() -> clap::Command {
    Cli::command().mut_subcommands(|s| s.args_override_self(true))
}

fn clap_exit(e: clap::Error) -> i32 {
    let _ = e.print();
    e.exit_code()
}

// Parses argv, splicing `--config` defaults in front of the explicit flags.
fn parse(argv: &[OsString]) -> std::result::Result<Cli, i32> {
    let matches = command().try_get_matches_from(argv).map_err(clap_exit)?;
    let Some((sub, sub_matches)) = matches.subcommand() else {
        return Err(EXIT_USAGE);
    };
    let config = sub_matches
        .try_get_one::<PathBuf>("config")
        .ok()
        .flatten()
        .cloned();
    let matches = match config {
        None => matches,
        Some(path) => {
            let defaults = match config_args(sub, &path) {
                Ok(a) => a,
                Err(f) => {
                    let (m, code) = match f {
                        Failure::Validation(m) => (m, EXIT_VALIDATION),
                        Failure::Io(m) => (m, EXIT_IO),
                    };
                    eprintln!("error: {m}");
                    return Err(code);
                }
            };
            let at = argv.iter().position(|a| a == sub).unwrap_or(1);
            let mut spliced: Vec<OsString> = argv[..=at].to_vec();
            spliced.extend(defaults.into_iter().map(OsString::from));
            spliced.extend_from_slice(&argv[at + 1..]);
            command().try_get_matches_from(&spliced).map_err(clap_exit)?
        }
    };
    Cli::from_arg_matches(&matches).map_err(clap_exit)
}

// Turns a config file into `--flag value` arguments for subcommand `sub`.
fn config_args(sub: &str, path: &Path) -> CmdResult<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let kv = KvConfig::parse(&text)?;
    let cmd = command();
    let sub_cmd = cmd.find_subcommand(sub).expect("parsed subcommand exists");
    let mut out = Vec::new();
    for e in kv.entries() {
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(e.key.as_str()) && e.key != "config")
            .ok_or_else(|| Failure::Validation(format!("{}: line {}: unknown key `{}`", path.display(), e.line, e.key)))?;
        let is_switch = matches!(arg.get_action(), clap::ArgAction::SetTrue);
        if is_switch {
            match e.value.as_str() {
                "true" => out.push(format!("--{}", e.key)),
                "false" => {}
                v => {
                    return Err(Failure::Validation(format!(
                        "{}: line {}: `{}` must be true or false, got `{v}`",
                        path.display(),
                        e.line,
                        e.key
                    )))
                }
            }
        } else {
            let value: Vec<&str> = e.value.split(',').map(str::trim).collect();
            out.push(format!("--{}={}", e.key, value.join(",")));
        }
    }
    Ok(out)
}

fn execute(cmd: Command) -> CmdResult<()> {
    let name = cmd.name();
    match cmd {
        Command::Table1(a) => table1(name, a),
        Command::Thm1Check(a) | Command::Thm1Verify(a) | Command::Thm2Gap(a) => theorem(name, a),
        Command::MaskSweep(a) | Command::WayshotGrid(a) | Command::FiQuality(a) | Command::AdjustEval(a) => {
            experiment(name, a)
        }
        Command::TopkFreq(a) => topk(name, a),
        Command::FfsbInfo(a) => info(a),
    }
}

fn load_spec(s: &str) -> CmdResult<GaussianTaskSpec> {
    if let Some(spec) = GaussianTaskSpec::preset(s) {
        return Ok(spec);
    }
    let path = Path::new(s);
    if !path.exists() {
        return Err(Failure::Validation(format!(
            "`{s}` is neither a preset ({}) nor an existing spec file",
            gaussian::PRESETS.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    storage::parse_gaussian_spec(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn spec_echo(name: &str, spec: &GaussianTaskSpec) -> Vec<(String, String)> {
    vec![
        ("spec".into(), name.into()),
        ("spec_dim".into(), spec.dim().to_string()),
        ("spec_mean_a".into(), join(spec.mean_a())),
        ("spec_mean_b".into(), join(spec.mean_b())),
        ("spec_std".into(), join(spec.std())),
    ]
}

fn write(
    command: &str,
    table: ResultsTable,
    output: &OutputArgs,
    exec: Option<&ExecArgs>,
    echo: Vec<(String, String)>,
) -> CmdResult<()> {
    let mut meta = vec![
        ("command".to_string(), command.to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    if let Some(x) = exec {
        meta.push(("seed".into(), x.seed.to_string()));
    }
    meta.extend(echo);
    meta.push(("format".into(), format!("{:?}", output.format).to_lowercase()));
    if let Some(c) = &output.config {
        meta.push(("config".into(), c.display().to_string()));
    }
    if !output.frozen_meta {
        if let Some(x) = exec {
            meta.push(("workers".into(), x.workers.to_string()));
        }
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        meta.push(("created_unix".into(), now.to_string()));
    }
    let table = table.with_metadata(meta);
    let format = match output.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
    };
    storage::write_results(&table, &output.out, format)?;
    println!("{command}: wrote {} rows to {}", table.rows().len(), output.out.display());
    Ok(())
}

fn table1(name: &str, a: Table1Args) -> CmdResult<()> {
    let spec = load_spec(&a.spec)?;
    let cells = harness::run_table1(&spec, a.tasks, a.exec.seed, a.exec.workers as usize, FitConfig::default())?;
    let mut echo = spec_echo(&a.spec, &spec);
    echo.push(("tasks".into(), a.tasks.to_string()));
    write(name, harness::table1_table(&cells), &a.output, Some(&a.exec), echo)
}

fn theorem(name: &str, a: TheoremArgs) -> CmdResult<()> {
    let thm2 = name == "thm2-gap";
    let spec_name = a.spec.clone().unwrap_or_else(|| if thm2 { "two-dim" } else { "thm1" }.to_string());
    let spec = load_spec(&spec_name)?;
    let shots = a.shots.clone().unwrap_or_else(|| if thm2 { vec![4, 16, 64, 256] } else { vec![400] });
    let draws = a.tasks.unwrap_or(if thm2 { 200 } else { 2000 });
    let workers = a.exec.workers as usize;
    let mut reports = Vec::with_capacity(shots.len());
    for &n in &shots {
        let r = match name {
            "thm1-check" => gaussian::theorem1_conditions(&spec, n)?,
            "thm1-verify" => gaussian::theorem1_verify(&spec, n, draws, a.exec.seed, workers)?,
            _ => gaussian::theorem2_gap(&spec, n, draws, a.exec.seed, workers)?,
        };
        reports.push(r);
    }
    let mut echo = spec_echo(&spec_name, &spec);
    echo.push(("shots".into(), join(&shots)));
    if name != "thm1-check" {
        echo.push(("draws".into(), draws.to_string()));
    }
    write(name, harness::theorem_table(&reports), &a.output, Some(&a.exec), echo)
}

fn experiment_config(name: &str, a: &ExperimentArgs) -> CmdResult<(ExperimentConfig, Vec<(String, String)>)> {
    let (mut cfg, mut echo) = match (&a.features, &a.spec) {
        (Some(path), _) => {
            let data = storage::read_feature_file(path)?;
            (
                ExperimentConfig::features(data),
                vec![("features".to_string(), path.display().to_string())],
            )
        }
        (None, spec) => {
            let spec_name = spec.as_deref().unwrap_or("two-dim");
            let spec = load_spec(spec_name)?;
            let echo = spec_echo(spec_name, &spec);
            (ExperimentConfig::gaussian(spec), echo)
        }
    };
    cfg.tasks = a.tasks;
    cfg.classifier = match a.classifier {
        ClassifierArg::Ncc => ClassifierChoice::Ncc,
        ClassifierArg::Logreg => ClassifierChoice::Logreg,
    };
    cfg.shot = a.shots[0];
    cfg.way = a.ways[0];
    cfg.query = a.query;
    cfg.views = a.views;
    cfg.rho = a.rho;
    if let Some(k) = &a.keep {
        cfg.keep_counts = k.clone();
    }
    let default_adjust = if name == "adjust-eval" {
        AdjustArg::EstimatedAugmented
    } else {
        AdjustArg::None
    };
    cfg.adjust = match a.adjust.unwrap_or(default_adjust) {
        AdjustArg::None => Adjust::None,
        AdjustArg::Oracle => Adjust::Oracle,
        AdjustArg::Estimated => Adjust::Estimated,
        AdjustArg::EstimatedAugmented => Adjust::EstimatedAugmented,
    };
    cfg.rank_by = match a.rank_by {
        RankArg::Oracle => RankBy::Oracle,
        RankArg::Estimated => RankBy::Estimated,
        RankArg::Identity => RankBy::Identity,
    };
    cfg.epsilon = a.epsilon;
    cfg.fit.l2_lambda = a.l2;
    cfg.seed = a.exec.seed;
    cfg.workers = a.exec.workers as usize;
    if name != "wayshot-grid" && a.ways.len() > 1 {
        return Err(Failure::Validation(format!("{name} takes a single --ways value")));
    }
    echo.extend(cfg.echo().into_iter().filter(|(k, _)| k != "seed" && k != "shot" && k != "way"));
    echo.push(("shots".into(), join(&a.shots)));
    echo.push(("ways".into(), join(&a.ways)));
    Ok((cfg, echo))
}

fn experiment(name: &str, a: ExperimentArgs) -> CmdResult<()> {
    let (cfg, echo) = experiment_config(name, &a)?;
    let table = match name {
        "mask-sweep" => {
            let mut rows = Vec::new();
            for &shot in &a.shots {
                let c = ExperimentConfig { shot, ..cfg.clone() };
                for p in harness::run_mask_sweep(&c)? {
                    rows.push(vec![
                        Cell::Int(shot as i64),
                        Cell::Int(p.x as i64),
                        Cell::Num(p.mean_error),
                        Cell::Num(p.std_error),
                        Cell::Int(p.n_tasks as i64),
                    ]);
                }
            }
            let cols = ["shot", "keep", "mean_error", "std_error", "n_tasks"];
            ResultsTable::new(cols.iter().map(|c| c.to_string()).collect(), rows)?
        }
        "wayshot-grid" => harness::grid_table(&harness::run_wayshot_grid(&cfg, &a.ways, &a.shots)?),
        "fi-quality" => {
            let views_available = match &cfg.source {
                harness::Source::Gaussian(_) => cfg.views > 0,
                harness::Source::Features(d) => d.has_groups(),
            };
            let mut estimators = vec![FiEstimator::Raw];
            if views_available {
                estimators.push(FiEstimator::Augmented);
            }
            estimators.push(FiEstimator::Oracle);
            harness::fi_quality_table(&harness::run_fi_quality(&cfg, &a.shots, &estimators)?)
        }
        _ => {
            let mut rows = Vec::new();
            let mut columns = None;
            for &shot in &a.shots {
                let c = ExperimentConfig { shot, ..cfg.clone() };
                let t = harness::adjust_table(&harness::run_adjust_eval(&c)?);
                columns.get_or_insert_with(|| {
                    let mut cols = vec!["shot".to_string()];
                    cols.extend(t.columns().iter().cloned());
                    cols
                });
                for r in t.rows() {
                    let mut row = vec![Cell::Int(shot as i64)];
                    row.extend(r.iter().cloned());
                    rows.push(row);
                }
            }
            ResultsTable::new(columns.unwrap_or_default(), rows)?
        }
    };
    write(name, table, &a.output, Some(&a.exec), echo)
}

fn topk(name: &str, a: TopkArgs) -> CmdResult<()> {
    let data = storage::read_feature_file(&a.features)?;
    let report = harness::run_topk_frequency(&data, a.top_k)?;
    let echo = vec![
        ("features".to_string(), a.features.display().to_string()),
        ("top_k".to_string(), a.top_k.to_string()),
        (
            "magnitude".to_string(),
            "mean |feature| over all rows of the pair's two classes".to_string(),
        ),
    ];
    write(name, harness::topk_table(&report), &a.output, None, echo)
}

fn info(a: InfoArgs) -> CmdResult<()> {
    let (header, len) = storage::read_header(&a.features)?;
    let data = storage::read_feature_file(&a.features)?;
    let counts = data.class_counts();
    let groups = data.groups().map(|g| {
        let mut ids = g.to_vec();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    });
    println!("file: {}", a.features.display());
    println!("bytes: {len}");
    println!("n_samples: {}", header.n_samples);
    println!("dim: {}", header.dim);
    println!("n_classes: {}", header.n_classes);
    println!("has_groups: {}", header.has_groups);
    println!("groups: {}", groups.map_or("none".to_string(), |g| g.to_string()));
    println!("class_counts: {}", join(&counts));
    Ok(())
}
