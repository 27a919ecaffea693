//! The `resave` command line.

use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use resave_core::models::Model;
use resave_core::save::{fit_batch, fit_recursive, EdrEstimate, RecursiveFit, Standardization};
use resave_core::{Kernel, Observation, SequencePlan};

use crate::checkpoint::{read_checkpoint, write_checkpoint};
use crate::config::{thread_cap, ConfigFile, THREADS_ENV};
use crate::error::{Error, Result};
use crate::harness::{run_replications, run_timing, Estimator, ExperimentConfig, StandardizeMode};
use crate::ingestion::{
    holdout_eval, load_csv, open_text, ColumnSelector, HoldoutOptions, HoldoutStandardize, RowParser,
};
use crate::report::{
    accuracy_table, bench_rows, bench_table, fmt_f64, replication_rows, write_accuracy, write_bench, write_file,
    write_holdout, write_replications, AccuracyRow,
};
use crate::selfcheck::{self, SelfcheckOptions};

/// Exit status for invalid flags, configuration or arguments.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for runtime failures.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "resave", version, about = "Recursive and batch kernel SAVE: simulations, timing, streaming fits")]
pub struct Cli {
    /// Configuration file of `key = value` lines; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo accuracy table (mean and std of R² per model, estimator, p).
    Simulate(SimulateArgs),
    /// One fit on a CSV file or simulated sample; prints eigenvalues and directions.
    Fit(FitArgs),
    /// Absorbs CSV lines one at a time, emitting the current estimate after each.
    Stream(StreamArgs),
    /// Wall-clock comparison: Save-R updates vs one Save-NR refit per added point.
    Bench(BenchArgs),
    /// Held-out evaluation of R²_i on a real dataset.
    EvalReal(EvalRealArgs),
    /// Runs the built-in oracle checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args, Default)]
pub struct PlanArgs {
    /// Bandwidth exponent, h_n = n^-c1 [default: 0.2]
    #[arg(long)]
    pub c1: Option<f64>,
    /// Truncation exponent, b_n = min(epsilon, n^-c2) [default: 0.03]
    #[arg(long)]
    pub c2: Option<f64>,
    /// Truncation cap [default: 0.05]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Step size scale, gamma_n = gamma_scale / n [default: 1]
    #[arg(long)]
    pub gamma_scale: Option<f64>,
    /// Kernel: epanechnikov or quartic4 [default: epanechnikov]
    #[arg(long)]
    pub kernel: Option<Kernel>,
    /// Enforce the open-interval constraints on c1 and c2
    #[arg(long)]
    pub strict_assumptions: bool,
    /// Number of directions kept [default: 1]
    #[arg(long)]
    pub retained: Option<usize>,
}

fn parse_model(s: &str) -> std::result::Result<Model, String> {
    s.parse::<Model>().map_err(|_| format!("unknown model `{s}` (expected 1 or 2)"))
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Models, comma separated [default: 1,2]
    #[arg(long, value_delimiter = ',', value_parser = parse_model)]
    pub model: Vec<Model>,
    /// Estimators, comma separated [default: save-r,save-nr]
    #[arg(long, value_delimiter = ',')]
    pub estimator: Vec<Estimator>,
    /// Initial sample size [default: 100]
    #[arg(long)]
    pub n0: Option<usize>,
    /// Added points, comma separated [default: 100,400]
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<usize>,
    /// Replications per cell [default: 200]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, capped by RESAVE_THREADS [default: all cores]
    #[arg(long)]
    pub threads: Option<usize>,
    /// population (predictors used as drawn) or sample [default: population]
    #[arg(long)]
    pub standardize: Option<StandardizeMode>,
    /// Accuracy table CSV; written to stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-replication CSV (R², wall time, direction)
    #[arg(long)]
    pub replications_out: Option<PathBuf>,
    #[command(flatten)]
    pub plan: PlanArgs,
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// CSV input with one header line (`.gz` accepted; `-` for stdin where supported)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Response column, name or zero-based index [default: 0]
    #[arg(long)]
    pub response: Option<String>,
    /// Predictor columns, comma separated names or indices [default: all other columns]
    #[arg(long)]
    pub predictors: Option<String>,
}

impl DataArgs {
    fn selectors(&self) -> (ColumnSelector, Vec<ColumnSelector>) {
        let response = ColumnSelector::parse(self.response.as_deref().unwrap_or("0"));
        let predictors = self.predictors.as_deref().map(ColumnSelector::parse_list).unwrap_or_default();
        (response, predictors)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Simulate the sample from this model instead of reading --input
    #[arg(long, value_parser = parse_model, conflicts_with = "input")]
    pub model: Option<Model>,
    /// Simulated sample size [default: 500]
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the simulated sample [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// save-r or save-nr [default: save-r]
    #[arg(long)]
    pub estimator: Option<Estimator>,
    /// Save-R: rows in the initial fit, which also fix the standardization;
    /// the remaining rows are absorbed one at a time [default: all rows]
    #[arg(long)]
    pub n0: Option<usize>,
    /// sample or population (none) [default: sample for --input, population for --model]
    #[arg(long)]
    pub standardize: Option<StandardizeMode>,
    /// Write the Save-R state for `stream --resume`
    #[arg(long)]
    pub checkpoint_out: Option<PathBuf>,
    /// Output CSV; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub plan: PlanArgs,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Rows of the initial batch fit (required unless --resume)
    #[arg(long, conflicts_with = "resume")]
    pub n0: Option<usize>,
    /// Continue from a checkpoint; every input row is then an update
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// sample or population (none), for the initial batch [default: sample]
    #[arg(long)]
    pub standardize: Option<StandardizeMode>,
    /// Emit the estimate after every k-th update; 0 disables [default: 1]
    #[arg(long)]
    pub every: Option<usize>,
    /// Write the final state here
    #[arg(long)]
    pub checkpoint_out: Option<PathBuf>,
    /// Output CSV; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub plan: PlanArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Model generating the data [default: 1]
    #[arg(long, value_parser = parse_model)]
    pub model: Option<Model>,
    /// Initial sample size [default: 100]
    #[arg(long)]
    pub n0: Option<usize>,
    /// Added points, comma separated [default: 100,400]
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<usize>,
    /// Timed repetitions per p [default: 3]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// population or sample [default: population]
    #[arg(long)]
    pub standardize: Option<StandardizeMode>,
    /// Timing CSV; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub plan: PlanArgs,
}

#[derive(Debug, Args)]
pub struct EvalRealArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Initial sample size [default: 100]
    #[arg(long)]
    pub n0: Option<usize>,
    /// Added points, comma separated [default: 100,400]
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<usize>,
    /// Estimators, comma separated [default: save-r,save-nr]
    #[arg(long, value_delimiter = ',')]
    pub estimator: Vec<Estimator>,
    /// Reference direction, comma separated [default: Save-NR on the full data]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub reference: Vec<f64>,
    /// Shuffle rows with this seed before splitting [default: file order]
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    /// Standardizer window: training or initial [default: training]
    #[arg(long)]
    pub holdout_standardize: Option<String>,
    /// Output CSV; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub plan: PlanArgs,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Seed of the check data [default: 20240601]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scales the oracle kernel constant (fault injection)
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub fault_kernel_scale: f64,
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Config(_) => EXIT_USAGE,
        Error::Estimation(resave_core::Error::InvalidArgument(_)) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args, &config),
        Command::Fit(args) => cmd_fit(args, &config),
        Command::Stream(args) => cmd_stream(args, &config, io::stdin().lock()),
        Command::Bench(args) => cmd_bench(args, &config),
        Command::EvalReal(args) => cmd_eval_real(args, &config),
        Command::Selfcheck(args) => cmd_selfcheck(args, &config),
    }
}

fn list_or<T: std::str::FromStr>(flag: Vec<T>, config: &ConfigFile, key: &str, default: Vec<T>) -> Result<Vec<T>> {
    if !flag.is_empty() {
        return Ok(flag);
    }
    Ok(config.get_list(key)?.unwrap_or(default))
}

/// Merges plan flags over the configuration file over defaults.
pub fn resolve_plan(args: &PlanArgs, config: &ConfigFile) -> Result<(SequencePlan, Kernel, usize)> {
    let d = SequencePlan::default();
    let plan = SequencePlan {
        gamma_scale: config.pick(args.gamma_scale, "gamma_scale", d.gamma_scale)?,
        gamma_exponent: d.gamma_exponent,
        c1: config.pick(args.c1, "c1", d.c1)?,
        c2: config.pick(args.c2, "c2", d.c2)?,
        epsilon_trunc: config.pick(args.epsilon, "epsilon", d.epsilon_trunc)?,
        strict_assumptions: args.strict_assumptions || config.get("strict_assumptions")?.unwrap_or(false),
    };
    plan.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let kernel = config.pick(args.kernel, "kernel", Kernel::default())?;
    let retained = config.pick(args.retained, "retained", 1)?;
    if retained == 0 {
        return Err(Error::Usage("retained must be at least 1".into()));
    }
    Ok((plan, kernel, retained))
}

fn experiment(args: &PlanArgs, config: &ConfigFile, standardize: StandardizeMode) -> Result<ExperimentConfig> {
    let (plan, kernel, retained) = resolve_plan(args, config)?;
    Ok(ExperimentConfig { plan, kernel, retained, standardize, threads: None })
}

fn output(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => write_file(p, write),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush().map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// Checks up front that an output file can be created.
fn check_writable(path: Option<&Path>) -> Result<()> {
    if let Some(p) = path {
        std::fs::OpenOptions::new().create(true).append(true).open(p).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, config: &ConfigFile) -> Result<i32> {
    let models = if args.model.is_empty() {
        match config.raw("model") {
            Some(v) => v.split(',').map(|s| parse_model(s.trim()).map_err(Error::Usage)).collect::<Result<_>>()?,
            None => vec![Model::One, Model::Two],
        }
    } else {
        args.model
    };
    let estimators = list_or(args.estimator, config, "estimator", Estimator::ALL.to_vec())?;
    let p_values = list_or(args.p, config, "p", vec![100, 400])?;
    let n0 = config.pick(args.n0, "n0", 100)?;
    let reps = config.pick(args.reps, "reps", 200)?;
    let seed = config.pick(args.seed, "seed", 1)?;
    let standardize = config.pick(args.standardize, "standardize", StandardizeMode::Population)?;
    let out = args.out.or(config.get("out")?);
    let replications_out = args.replications_out.or(config.get("replications_out")?);
    let mut exp = experiment(&args.plan, config, standardize)?;
    let env = std::env::var(THREADS_ENV).ok();
    exp.threads = thread_cap(
        match args.threads {
            Some(t) => Some(t),
            None => config.get("threads")?,
        },
        env.as_deref(),
    )?;
    if reps == 0 {
        return Err(Error::Usage("reps must be at least 1".into()));
    }
    check_writable(out.as_deref())?;
    check_writable(replications_out.as_deref())?;

    let mut rows = Vec::new();
    let mut per_rep = Vec::new();
    for &model in &models {
        for &estimator in &estimators {
            for &p in &p_values {
                let report = run_replications(model, n0, p, reps, estimator, seed, &exp)?;
                for (rep, msg) in &report.failures {
                    eprintln!("warning: model {} {estimator} p={p} replication {rep} failed: {msg}", model.name());
                }
                rows.push(AccuracyRow::from(&report));
                per_rep.extend(replication_rows(&report));
            }
        }
    }
    output(out.as_deref(), |w| write_accuracy(w, &rows))?;
    if out.is_some() {
        print!("{}", accuracy_table(&rows));
    }
    if let Some(path) = replications_out {
        write_file(path, |w| write_replications(w, &per_rep))?;
    }
    Ok(0)
}

/// Header of an estimate line: `n,lambda_1..lambda_d,beta{j}_{k}`.
pub fn estimate_header(dim: usize, retained: usize) -> String {
    let mut cols = vec!["n".to_string()];
    cols.extend((1..=dim).map(|k| format!("lambda_{k}")));
    for j in 1..=retained {
        cols.extend((1..=dim).map(|k| format!("beta{j}_{k}")));
    }
    cols.join(",")
}

/// Sample size, all eigenvalues and the retained directions on the
/// predictor scale.
pub fn estimate_line(n: usize, edr: &EdrEstimate) -> String {
    let mut cols = vec![n.to_string()];
    cols.extend(edr.eigenvalues.iter().map(|v| fmt_f64(*v)));
    for j in 0..edr.retained() {
        cols.extend(edr.direction(j).iter().map(|v| fmt_f64(*v)));
    }
    cols.join(",")
}

fn write_line(w: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(w, "{line}").map_err(|e| Error::io("<output>", e))
}

fn load_observations(data: &DataArgs) -> Result<Vec<Observation>> {
    let path = data.input.as_ref().ok_or_else(|| Error::Usage("--input or --model is required".into()))?;
    let (response, predictors) = data.selectors();
    let report = load_csv(path, &response, &predictors)?;
    if !report.rejected.is_empty() {
        eprintln!("skipped {} malformed rows", report.rejected.len());
    }
    Ok(report.dataset.observations())
}

fn cmd_fit(args: FitArgs, config: &ConfigFile) -> Result<i32> {
    let (plan, kernel, retained) = resolve_plan(&args.plan, config)?;
    let (data, default_mode) = match args.model {
        Some(model) => {
            let n = args.n.unwrap_or(500);
            let seed = args.seed.unwrap_or(1);
            (
                resave_core::models::generate(model, n, &mut resave_core::rng::Rng::new(seed)),
                StandardizeMode::Population,
            )
        }
        None => (load_observations(&args.data)?, StandardizeMode::Sample),
    };
    let standardization = match args.standardize.unwrap_or(default_mode) {
        StandardizeMode::Population => Standardization::None,
        StandardizeMode::Sample => Standardization::Estimate,
    };
    let estimator = config.pick(args.estimator, "estimator", Estimator::SaveR)?;
    if args.checkpoint_out.is_some() && estimator != Estimator::SaveR {
        return Err(Error::Usage("--checkpoint-out needs the save-r estimator".into()));
    }
    check_writable(args.out.as_deref())?;
    let dim = data.first().map_or(0, |o| o.dim());
    let edr = match estimator {
        Estimator::SaveR => {
            let n0 = args.n0.unwrap_or(data.len()).min(data.len());
            let mut fit = fit_recursive(&data[..n0], plan, kernel, retained, standardization)?;
            for obs in &data[n0..] {
                fit.absorb(obs)?;
            }
            fit.refresh()?;
            if let Some(path) = &args.checkpoint_out {
                write_checkpoint(path, &fit)?;
            }
            fit.edr().clone()
        }
        Estimator::SaveNr => fit_batch(&data, plan, kernel, retained, standardization)?.edr,
    };
    output(args.out.as_deref(), |w| {
        write_line(w, &estimate_header(dim, retained))?;
        write_line(w, &estimate_line(data.len(), &edr))
    })?;
    Ok(0)
}

/// Outcome of a streaming run.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSummary {
    pub updates: usize,
    pub emitted: usize,
    /// One-based input line numbers of skipped lines.
    pub malformed: Vec<u64>,
    pub fit: RecursiveFit,
}

/// Streaming driver: reads CSV lines from `input` (header first), builds or
/// resumes a fit, absorbs each remaining line and writes estimate lines to
/// `out`.
pub fn stream(
    input: impl io::Read,
    out: &mut dyn Write,
    parser_args: &DataArgs,
    start: StreamStart,
    every: usize,
) -> Result<StreamSummary> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let (response, predictors) = parser_args.selectors();
    let parser = RowParser::new(headers, &response, &predictors)?;
    let mut malformed = Vec::new();
    let mut records = rdr.records();
    let mut next_obs = |malformed: &mut Vec<u64>| -> Option<Observation> {
        loop {
            let rec = records.next()?;
            match rec {
                Ok(r) => match parser.parse_observation(&r) {
                    Ok(o) => return Some(o),
                    Err(_) => malformed.push(r.position().map_or(0, |p| p.line())),
                },
                Err(e) => malformed.push(e.position().map_or(0, |p| p.line())),
            }
        }
    };

    let mut fit = match start {
        StreamStart::Resume(fit) => {
            if fit.state().dim() != parser.dim() {
                return Err(Error::Schema(format!(
                    "checkpoint has {} predictors, input selects {}",
                    fit.state().dim(),
                    parser.dim()
                )));
            }
            *fit
        }
        StreamStart::Initial { n0, plan, kernel, retained, standardization } => {
            let mut batch = Vec::with_capacity(n0);
            while batch.len() < n0 {
                match next_obs(&mut malformed) {
                    Some(o) => batch.push(o),
                    None => break,
                }
            }
            if batch.len() < n0 {
                return Err(resave_core::Error::InsufficientData { needed: n0, got: batch.len() }.into());
            }
            fit_recursive(&batch, plan, kernel, retained, standardization)?
        }
    };

    let mut updates = 0;
    let mut emitted = 0;
    while let Some(obs) = next_obs(&mut malformed) {
        updates += 1;
        if every > 0 && updates % every == 0 {
            fit.update(&obs)?;
            if emitted == 0 {
                write_line(out, &estimate_header(fit.state().dim(), fit.retained()))?;
            }
            write_line(out, &estimate_line(fit.len(), fit.edr()))?;
            emitted += 1;
        } else {
            fit.absorb(&obs)?;
        }
    }
    if every == 0 || updates % every != 0 {
        fit.refresh()?;
    }
    Ok(StreamSummary { updates, emitted, malformed, fit })
}

/// How a stream begins.
#[derive(Debug, Clone)]
pub enum StreamStart {
    Resume(Box<RecursiveFit>),
    Initial { n0: usize, plan: SequencePlan, kernel: Kernel, retained: usize, standardization: Standardization },
}

fn cmd_stream(args: StreamArgs, config: &ConfigFile, stdin: impl BufRead) -> Result<i32> {
    let start = match &args.resume {
        Some(path) => StreamStart::Resume(Box::new(read_checkpoint(path)?)),
        None => {
            let n0 = args.n0.ok_or_else(|| Error::Usage("stream needs --n0 or --resume".into()))?;
            let (plan, kernel, retained) = resolve_plan(&args.plan, config)?;
            let standardization = match args.standardize.unwrap_or(StandardizeMode::Sample) {
                StandardizeMode::Population => Standardization::None,
                StandardizeMode::Sample => Standardization::Estimate,
            };
            StreamStart::Initial { n0, plan, kernel, retained, standardization }
        }
    };
    let every = args.every.unwrap_or(1);
    check_writable(args.out.as_deref())?;
    check_writable(args.checkpoint_out.as_deref())?;
    let input: Box<dyn io::Read> = match args.data.input.as_deref() {
        None => Box::new(stdin),
        Some(p) if p == Path::new("-") => Box::new(stdin),
        Some(p) => open_text(p)?,
    };
    let summary = match args.out.as_deref() {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            let s = stream(input, &mut w, &args.data, start, every)?;
            w.flush().map_err(|e| Error::io(path, e))?;
            s
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            let s = stream(input, &mut w, &args.data, start, every)?;
            w.flush().map_err(|e| Error::io("<stdout>", e))?;
            s
        }
    };
    if let Some(path) = &args.checkpoint_out {
        write_checkpoint(path, &summary.fit)?;
    }
    if !summary.malformed.is_empty() {
        let lines: Vec<String> = summary.malformed.iter().map(u64::to_string).collect();
        eprintln!("skipped {} malformed lines: {}", summary.malformed.len(), lines.join(","));
    }
    eprintln!("absorbed {} updates, total n = {}", summary.updates, summary.fit.len());
    Ok(0)
}

fn cmd_bench(args: BenchArgs, config: &ConfigFile) -> Result<i32> {
    let model = match args.model {
        Some(m) => m,
        None => match config.raw("model") {
            Some(v) => parse_model(v).map_err(Error::Usage)?,
            None => Model::One,
        },
    };
    let n0 = config.pick(args.n0, "n0", 100)?;
    let p_values = list_or(args.p, config, "p", vec![100, 400])?;
    let reps = config.pick(args.reps, "reps", 3)?;
    let seed = config.pick(args.seed, "seed", 1)?;
    let standardize = config.pick(args.standardize, "standardize", StandardizeMode::Population)?;
    let out = args.out.or(config.get("out")?);
    let exp = experiment(&args.plan, config, standardize)?;
    check_writable(out.as_deref())?;
    let rows = bench_rows(&run_timing(model, n0, &p_values, reps, seed, &exp)?);
    output(out.as_deref(), |w| write_bench(w, &rows))?;
    if out.is_some() {
        print!("{}", bench_table(&rows));
    }
    Ok(0)
}

fn cmd_eval_real(args: EvalRealArgs, config: &ConfigFile) -> Result<i32> {
    let path = args.data.input.as_ref().ok_or_else(|| Error::Usage("eval-real needs --input".into()))?;
    let (response, predictors) = args.data.selectors();
    let loaded = load_csv(path, &response, &predictors)?;
    if !loaded.rejected.is_empty() {
        eprintln!("skipped {} rows with missing or invalid values", loaded.rejected.len());
    }
    let n0 = config.pick(args.n0, "n0", 100)?;
    let p_values = list_or(args.p, config, "p", vec![100, 400])?;
    let estimators = list_or(args.estimator, config, "estimator", Estimator::ALL.to_vec())?;
    let standardize = match args.holdout_standardize.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("training") => HoldoutStandardize::Training,
        Some("initial") => HoldoutStandardize::Initial,
        Some(other) => return Err(Error::Usage(format!("unknown holdout standardization `{other}`"))),
    };
    let options = HoldoutOptions {
        config: experiment(&args.plan, config, StandardizeMode::Sample)?,
        reference: if args.reference.is_empty() { None } else { Some(args.reference) },
        shuffle_seed: args.shuffle_seed,
        standardize,
    };
    check_writable(args.out.as_deref())?;
    let mut reports = Vec::new();
    for &p in &p_values {
        for &estimator in &estimators {
            reports.push(holdout_eval(&loaded.dataset, n0, p, estimator, &options)?);
        }
    }
    output(args.out.as_deref(), |w| write_holdout(w, &reports))?;
    Ok(0)
}

fn cmd_selfcheck(args: SelfcheckArgs, _config: &ConfigFile) -> Result<i32> {
    let defaults = SelfcheckOptions::default();
    let options =
        SelfcheckOptions { kernel_constant_scale: args.fault_kernel_scale, seed: args.seed.unwrap_or(defaults.seed) };
    let (results, seconds) = selfcheck::run(&options);
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed in {seconds:.2} s", results.len() - failed, results.len());
    Ok(if failed == 0 { 0 } else { EXIT_FAILURE })
}
