//! `tpi`: generate cohorts, explore them, train and apply single models, and
//! run the full benchmark.
//!
//! Exit codes: 0 success, 2 usage, 3 data error, 4 numeric failure,
//! 5 benchmark finished with failed cells.

mod plot;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use log::info;
use ndarray::Array2;
use tpi_core::classifiers::{
    deserialize_model, serialize_model, train, ClassifierSpec, ModelDocument, ModelKind, RAW_SPACE,
};
use tpi_core::evaluation::{run_benchmark, write_report_csv, BenchmarkConfig, Objective};
use tpi_core::ingest::{generate_cohort, load_cohort, save_cohort, GeneratorConfig};
use tpi_core::preprocess::{
    correlation_matrix, fit_pca, FeatureConfig, FeaturePipeline, FeatureSpace, FittedScaler, ReducedSelection,
    DEFAULT_VARIANCE_THRESHOLD,
};
use tpi_core::{Error, ErrorClass, RngStream};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;
const EXIT_PARTIAL: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "tpi", version, about = "Tissue-pulsatility hemorrhage screening pipeline")]
#[command(after_help = "Exit codes: 0 success, 2 usage, 3 data error, 4 numeric failure, 5 partial benchmark failure")]
struct Cli {
    /// Flat key=value file; each key is a flag of the subcommand. Flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic cohort CSV.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Correlation matrix, scree table and loadings of a cohort.
    #[command(args_override_self = true)]
    Eda(EdaArgs),
    /// Fit one classifier on a whole cohort and save it with its preprocessing.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Apply a saved model to a cohort.
    #[command(args_override_self = true)]
    Predict(PredictArgs),
    /// Every model on every feature space, tuned by grid search.
    #[command(args_override_self = true)]
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Number of samples.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// TBI-to-healthy ratio.
    #[arg(long, default_value_t = 9.0)]
    imbalance: f64,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output cohort CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EdaArgs {
    /// Cohort CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Cumulative variance the retained components must reach.
    #[arg(long, default_value_t = DEFAULT_VARIANCE_THRESHOLD)]
    threshold: f64,
    /// Also write scree.svg and corr-heatmap.svg.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, action = ArgAction::Set)]
    svg: bool,
}

#[derive(Args, Debug, Clone)]
struct FeatureArgs {
    /// Cumulative variance kept by the pca space.
    #[arg(long, default_value_t = DEFAULT_VARIANCE_THRESHOLD)]
    threshold: f64,
    /// 1-based frames of the reduced space (angle is always added).
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_values_t = [2usize, 14, 28])]
    frames: Vec<usize>,
    /// Pick the reduced frames by first-component loading instead of --frames.
    #[arg(long)]
    top_loadings: Option<usize>,
}

impl FeatureArgs {
    fn config(&self) -> FeatureConfig {
        FeatureConfig {
            variance_threshold: self.threshold,
            reduced: match self.top_loadings {
                Some(k) => ReducedSelection::TopLoadings(k),
                None => ReducedSelection::Frames(self.frames.clone()),
            },
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Cohort CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output model document.
    #[arg(long)]
    out: PathBuf,
    /// gaussian_nb, adaboost, logitboost, rusboost, neural_net or svm.
    #[arg(long)]
    model: ModelKind,
    /// original, reduced, pca, or raw for no preprocessing.
    #[arg(long, default_value = "pca")]
    space: String,
    /// Hyperparameter override, e.g. rounds=50 or kernel=rbf.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Cohort CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Model document written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Prediction CSV (row,label,score).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Cohort CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory for report.csv and report.json.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated feature spaces.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_values_t = FeatureSpace::ALL.map(|s| s.to_string()))]
    spaces: Vec<String>,
    /// Comma-separated model kinds.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_values_t = ModelKind::ALL.map(|m| m.to_string()))]
    models: Vec<String>,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Cross-validation folds for the grid search; 0 or 1 selects on the validation split.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// f1, macro_f1, accuracy, recall, precision or specificity.
    #[arg(long, default_value = "f1")]
    objective: Objective,
    /// Grid point, e.g. `svm:kernel=rbf;c=10`; repeat to build a grid. Replaces that family's default grid.
    #[arg(long = "grid", value_name = "KIND:KEY=VALUE;...")]
    grid: Vec<String>,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Partial(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match with_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Eda(a) => cmd_eda(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => EXIT_USAGE,
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Numeric => EXIT_NUMERIC,
            })
        }
        Err(Failure::Partial(n)) => {
            eprintln!("error: {n} benchmark cell(s) failed");
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}

/// Splices the flags of a `--config` file in right after the subcommand, so
/// that flags given on the command line override them.
fn with_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let injected = config_flags(&text).map_err(|e| format!("{path}: {e}"))?;

    let mut skip_value = false;
    let sub = argv.iter().enumerate().skip(1).position(|(_, a)| {
        if skip_value {
            skip_value = false;
            return false;
        }
        if a == "--config" {
            skip_value = true;
        }
        !a.starts_with('-')
    });
    let Some(sub) = sub.map(|p| p + 1) else {
        return Ok(argv);
    };
    let mut out = argv[..=sub].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[sub + 1..]);
    Ok(out)
}

fn config_flags(text: &str) -> Result<Vec<String>, String> {
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(format!("line {}: invalid key '{key}'", n + 1));
        }
        flags.push(format!("--{key}={}", value.trim()));
    }
    Ok(flags)
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|source| {
        Failure::Core(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn create_dir(path: &Path) -> CmdResult {
    fs::create_dir_all(path).map_err(|source| {
        Failure::Core(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    let cfg = GeneratorConfig {
        n_samples: a.n,
        imbalance_ratio: a.imbalance,
        seed: a.seed,
        ..GeneratorConfig::default()
    };
    let cohort = generate_cohort(&cfg)?;
    save_cohort(&cohort, &a.out)?;
    let [healthy, tbi] = cohort.class_counts();
    println!(
        "{}: {} rows (healthy {healthy}, tbi {tbi})",
        a.out.display(),
        cohort.n_samples()
    );
    Ok(())
}

fn matrix_csv(corner: &str, rows: &[String], cols: &[String], m: &Array2<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{corner},{}", cols.join(","));
    for (name, row) in rows.iter().zip(m.rows()) {
        s.push_str(name);
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

fn cmd_eda(a: EdaArgs) -> CmdResult {
    let cohort = load_cohort(&a.input)?;
    create_dir(&a.out)?;
    let names = &cohort.feature_names;

    let corr = correlation_matrix(cohort.features.view())?;
    write_text(&a.out.join("corr.csv"), &matrix_csv("feature", names, names, &corr))?;

    let scaled = FittedScaler::fit(cohort.features.view())?.transform(cohort.features.view())?;
    let pca = fit_pca(scaled.view(), a.threshold)?;
    let rho = pca.explained_variance();
    let cum = pca.cumulative_explained();
    let mut scree = String::from("index,lambda,rho,cumulative\n");
    for (i, ((l, r), c)) in pca.eigenvalues.iter().zip(&rho).zip(&cum).enumerate() {
        let _ = writeln!(scree, "{},{l},{r},{c}", i + 1);
    }
    write_text(&a.out.join("scree.csv"), &scree)?;

    let pcs: Vec<String> = (1..=pca.loading_vectors.ncols()).map(|i| format!("pc{i}")).collect();
    write_text(
        &a.out.join("loadings.csv"),
        &matrix_csv("feature", names, &pcs, &pca.loading_vectors),
    )?;

    if a.svg {
        write_text(&a.out.join("scree.svg"), &plot::scree(&rho, &cum, a.threshold))?;
        write_text(&a.out.join("corr-heatmap.svg"), &plot::heatmap(&corr, names))?;
    }
    println!(
        "{} components reach {:.1}% of the variance (first: {:.1}%)",
        pca.retained_rank,
        100.0 * cum[pca.retained_rank - 1],
        100.0 * rho[0]
    );
    Ok(())
}

fn parse_space(s: &str) -> Result<Option<FeatureSpace>, Error> {
    if s.trim() == RAW_SPACE {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

fn cmd_train(a: TrainArgs) -> CmdResult {
    let mut spec = ClassifierSpec::default_for(a.model);
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        spec.set(k.trim(), v)?;
    }
    let space = parse_space(&a.space)?;
    let cohort = load_cohort(&a.input)?;

    let (x, pipeline) = match space {
        Some(space) => {
            let p = FeaturePipeline::fit(&cohort, space, &a.features.config())?;
            (p.transform(&cohort)?, Some(p))
        }
        None => (cohort.clone(), None),
    };
    let tag = space.map_or(RAW_SPACE, |s| s.as_str());
    let model = train(&spec, x.features.view(), &x.labels, &mut RngStream::new(a.seed, 0))?.with_feature_space(tag);
    info!("trained {} in {:.1} ms", spec.describe(), model.meta.train_ms);
    println!(
        "{} on {tag} ({} features, {} rows): training accuracy {:.4}",
        model.kind(),
        model.meta.n_features,
        model.meta.n_train,
        model.meta.training_accuracy
    );
    write_text(&a.out, &serialize_model(&ModelDocument::new(model, pipeline))?)
}

fn cmd_predict(a: PredictArgs) -> CmdResult {
    let text = fs::read_to_string(&a.model).map_err(|source| Error::Io {
        path: a.model.clone(),
        source,
    })?;
    let doc = deserialize_model(&text)?;
    let cohort = load_cohort(&a.input)?;
    let (labels, scores) = doc.score_cohort(&cohort)?;

    let mut out = String::from("row,label,score\n");
    for (i, (l, s)) in labels.iter().zip(&scores).enumerate() {
        let _ = writeln!(out, "{i},{l},{s}");
    }
    write_text(&a.out, &out)?;
    let correct = labels.iter().zip(&cohort.labels).filter(|(p, t)| p == t).count();
    println!(
        "{} rows, accuracy against file labels {:.4}",
        labels.len(),
        correct as f64 / labels.len().max(1) as f64
    );
    Ok(())
}

fn parse_grid_point(text: &str) -> Result<ClassifierSpec, Error> {
    let (kind, assignments) = text.split_once(':').unwrap_or((text, ""));
    let mut spec = ClassifierSpec::default_for(kind.parse()?);
    for kv in assignments.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("grid point '{text}': expected KEY=VALUE, got '{kv}'")))?;
        spec.set(k.trim(), v)?;
    }
    Ok(spec)
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let cfg = BenchmarkConfig {
        spaces: a.spaces.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
        models: a.models.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
        seed: a.seed,
        folds: a.folds,
        objective: a.objective,
        features: a.features.config(),
        grids: a.grid.iter().map(|g| parse_grid_point(g)).collect::<Result<_, _>>()?,
        ..BenchmarkConfig::default()
    };
    cfg.validate()?;
    let cohort = load_cohort(&a.input)?;
    let report = run_benchmark(&cohort, &cfg)?;

    create_dir(&a.out)?;
    write_report_csv(&a.out.join("report.csv"), &report)?;
    write_text(&a.out.join("report.json"), &report.to_json()?)?;

    println!(
        "{:<12} {:<9} {:>8} {:>8} {:>8} {:>8}",
        "model", "space", "acc", "recall", "spec", "f1"
    );
    for row in &report.rows {
        match &row.outcome {
            Ok(c) => println!(
                "{:<12} {:<9} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                row.model.as_str(),
                row.space.as_str(),
                c.metrics.accuracy,
                c.metrics.recall,
                c.metrics.specificity,
                c.metrics.f1
            ),
            Err(e) => println!("{:<12} {:<9} failed: {e}", row.model.as_str(), row.space.as_str()),
        }
    }
    match report.failed_cells().count() {
        0 => Ok(()),
        n => Err(Failure::Partial(n)),
    }
}
