//! Monte Carlo replications and the recursive-vs-batch timing benchmark.
//!
//! Every replication draws its data from `Rng::stream(seed, rep)`, so results
//! do not depend on thread count or scheduling. Both estimators see the same
//! sample for a given `(seed, rep)`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use resave_core::models::{generate, r_squared, Model};
use resave_core::rng::Rng;
use resave_core::save::{fit_batch, fit_recursive, EdrEstimate, Standardization};
use resave_core::{Kernel, Observation, SequencePlan};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// Recursive estimator: fit on the first `n0` points, then one update per
    /// added point.
    SaveR,
    /// Non-recursive kernel estimator on the whole sample.
    SaveNr,
}

impl Estimator {
    pub const ALL: [Estimator; 2] = [Estimator::SaveR, Estimator::SaveNr];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::SaveR => "save-r",
            Estimator::SaveNr => "save-nr",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "save-r" | "r" | "recursive" => Ok(Estimator::SaveR),
            "save-nr" | "nr" | "batch" => Ok(Estimator::SaveNr),
            other => Err(Error::Usage(format!("unknown estimator `{other}` (expected save-r or save-nr)"))),
        }
    }
}

/// Source of the centering/whitening map for simulated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StandardizeMode {
    /// Known population moments of the models (`E X = 0`, `cov X = I`), so
    /// predictors are used as drawn.
    #[default]
    Population,
    /// Sample mean and covariance: of the initial `n0` points for Save-R
    /// (frozen while streaming), of the full sample for Save-NR.
    Sample,
}

impl FromStr for StandardizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "population" | "none" => Ok(StandardizeMode::Population),
            "sample" => Ok(StandardizeMode::Sample),
            other => Err(Error::Usage(format!("unknown standardization `{other}` (expected population or sample)"))),
        }
    }
}

impl fmt::Display for StandardizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StandardizeMode::Population => "population",
            StandardizeMode::Sample => "sample",
        })
    }
}

impl StandardizeMode {
    fn standardization(self) -> Standardization {
        match self {
            StandardizeMode::Population => Standardization::None,
            StandardizeMode::Sample => Standardization::Estimate,
        }
    }
}

/// Estimator settings shared by every replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub plan: SequencePlan,
    pub kernel: Kernel,
    /// Number of directions kept (`N`).
    pub retained: usize,
    pub standardize: StandardizeMode,
    /// Worker threads for replications; `None` uses the rayon default.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            plan: SequencePlan::default(),
            kernel: Kernel::Epanechnikov,
            retained: 1,
            standardize: StandardizeMode::Population,
            threads: None,
        }
    }
}

/// Mean, sample standard deviation and range of a set of values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Summary {
    /// Sequential sums in slice order; the standard deviation uses `n - 1`
    /// and is zero for a single value.
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, min: f64::NAN, max: f64::NAN, count };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { mean, std, min, max, count }
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub rep: u64,
    /// Leading direction on the predictor scale, unit length.
    pub direction: Vec<f64>,
    pub r2: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationReport {
    pub model: Model,
    pub estimator: Estimator,
    pub n0: usize,
    pub p: usize,
    pub reps: usize,
    pub seed: u64,
    /// Successful replications in replication order.
    pub records: Vec<ReplicationRecord>,
    /// Replications whose fit failed, with the error message.
    pub failures: Vec<(u64, String)>,
    pub r2: Summary,
    pub wall: Summary,
}

impl ReplicationReport {
    pub fn r2_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.r2).collect()
    }
}

/// Fits `estimator` on `data`. Save-R fits the first `n0` points and absorbs
/// the rest one at a time, refreshing the SAVE matrix after each; Save-NR
/// fits everything at once.
pub fn fit_estimator(
    estimator: Estimator,
    data: &[Observation],
    n0: usize,
    config: &ExperimentConfig,
    standardization: Standardization,
) -> resave_core::Result<EdrEstimate> {
    match estimator {
        Estimator::SaveR => {
            let n0 = n0.min(data.len());
            let mut fit = fit_recursive(&data[..n0], config.plan, config.kernel, config.retained, standardization)?;
            for obs in &data[n0..] {
                fit.update(obs)?;
            }
            Ok(fit.edr().clone())
        }
        Estimator::SaveNr => Ok(fit_batch(data, config.plan, config.kernel, config.retained, standardization)?.edr),
    }
}

/// Data of replication `rep`: `n` draws from `model` on stream `(seed, rep)`.
pub fn replication_data(model: Model, n: usize, seed: u64, rep: u64) -> Vec<Observation> {
    generate(model, n, &mut Rng::stream(seed, rep))
}

/// Runs one replication and scores the leading direction against the
/// model's true direction.
pub fn replicate(
    model: Model,
    n0: usize,
    p: usize,
    estimator: Estimator,
    seed: u64,
    rep: u64,
    config: &ExperimentConfig,
) -> resave_core::Result<ReplicationRecord> {
    let data = replication_data(model, n0 + p, seed, rep);
    let start = Instant::now();
    let edr = fit_estimator(estimator, &data, n0, config, config.standardize.standardization())?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let direction = edr.direction(0);
    let r2 = r_squared(&direction, &model.beta_true())?;
    Ok(ReplicationRecord { rep, direction, r2, wall_seconds })
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Runs `reps` independent replications in parallel. Failed fits are counted
/// and left out of the statistics.
pub fn run_replications(
    model: Model,
    n0: usize,
    p: usize,
    reps: usize,
    estimator: Estimator,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<ReplicationReport> {
    if reps == 0 {
        return Err(Error::Usage("reps must be at least 1".into()));
    }
    config.plan.validate()?;
    let outcomes: Vec<(u64, resave_core::Result<ReplicationRecord>)> = with_pool(config.threads, || {
        (0..reps as u64)
            .into_par_iter()
            .map(|rep| (rep, replicate(model, n0, p, estimator, seed, rep, config)))
            .collect()
    })?;
    let mut records = Vec::with_capacity(reps);
    let mut failures = Vec::new();
    for (rep, outcome) in outcomes {
        match outcome {
            Ok(record) => records.push(record),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    let r2 = Summary::of(&records.iter().map(|r| r.r2).collect::<Vec<_>>());
    let wall = Summary::of(&records.iter().map(|r| r.wall_seconds).collect::<Vec<_>>());
    Ok(ReplicationReport { model, estimator, n0, p, reps, seed, records, failures, r2, wall })
}

/// Wall-clock comparison at one `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub p: usize,
    pub save_r: Summary,
    pub save_nr: Summary,
}

impl TimingRow {
    /// `mean(Save-R) / mean(Save-NR)`.
    pub fn ratio(&self) -> f64 {
        self.save_r.mean / self.save_nr.mean
    }
}

/// Save-R workload: fit on `n0`, then `p` single updates.
pub fn time_recursive(data: &[Observation], n0: usize, config: &ExperimentConfig) -> resave_core::Result<f64> {
    let standardization = config.standardize.standardization();
    let start = Instant::now();
    let mut fit = fit_recursive(&data[..n0], config.plan, config.kernel, config.retained, standardization)?;
    for obs in &data[n0..] {
        fit.update(obs)?;
    }
    std::hint::black_box(fit.edr());
    Ok(start.elapsed().as_secs_f64())
}

/// Save-NR workload: one full refit per added point (sample sizes
/// `n0 + 1, …, n0 + p`), or a single fit on `n0` points when `p = 0`.
pub fn time_batch_refits(data: &[Observation], n0: usize, config: &ExperimentConfig) -> resave_core::Result<f64> {
    let standardization = config.standardize.standardization();
    let sizes: Vec<usize> = if data.len() == n0 { vec![n0] } else { (n0 + 1..=data.len()).collect() };
    let start = Instant::now();
    for m in sizes {
        let fit = fit_batch(&data[..m], config.plan, config.kernel, config.retained, standardization.clone())?;
        std::hint::black_box(&fit.edr);
    }
    Ok(start.elapsed().as_secs_f64())
}

/// Times both workloads for every `p`, on a single thread, after one
/// untimed warm-up of each.
pub fn run_timing(
    model: Model,
    n0: usize,
    p_values: &[usize],
    reps: usize,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<Vec<TimingRow>> {
    if reps == 0 {
        return Err(Error::Usage("reps must be at least 1".into()));
    }
    config.plan.validate()?;
    let warm_p = p_values.first().copied().unwrap_or(0);
    let warm = replication_data(model, n0 + warm_p, seed ^ 0x5741_524D, 0);
    time_recursive(&warm, n0, config)?;
    time_batch_refits(&warm, n0, config)?;

    let mut rows = Vec::with_capacity(p_values.len());
    for &p in p_values {
        let mut r = Vec::with_capacity(reps);
        let mut nr = Vec::with_capacity(reps);
        for rep in 0..reps as u64 {
            let data = replication_data(model, n0 + p, seed, rep);
            r.push(time_recursive(&data, n0, config)?);
            nr.push(time_batch_refits(&data, n0, config)?);
        }
        rows.push(TimingRow { p, save_r: Summary::of(&r), save_nr: Summary::of(&nr) });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_basics() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!((s.min, s.max, s.count), (1.0, 3.0, 3));
        assert_eq!(Summary::of(&[5.0]).std, 0.0);
        assert!(Summary::of(&[]).mean.is_nan());
    }

    #[test]
    fn estimator_names() {
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!("pca".parse::<Estimator>().is_err());
        assert_eq!("sample".parse::<StandardizeMode>().unwrap(), StandardizeMode::Sample);
    }

    #[test]
    fn single_replication_is_reproducible() {
        let config = ExperimentConfig::default();
        let a = run_replications(Model::One, 100, 20, 1, Estimator::SaveR, 7, &config).unwrap();
        let b = run_replications(Model::One, 100, 20, 1, Estimator::SaveR, 7, &config).unwrap();
        assert_eq!(a.records[0].direction, b.records[0].direction);
        assert_eq!(a.r2.mean.to_bits(), b.r2.mean.to_bits());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let one = ExperimentConfig { threads: Some(1), ..ExperimentConfig::default() };
        let four = ExperimentConfig { threads: Some(4), ..ExperimentConfig::default() };
        let a = run_replications(Model::Two, 60, 10, 8, Estimator::SaveNr, 3, &one).unwrap();
        let b = run_replications(Model::Two, 60, 10, 8, Estimator::SaveNr, 3, &four).unwrap();
        assert_eq!(a.r2_values(), b.r2_values());
        assert_eq!(a.r2.mean.to_bits(), b.r2.mean.to_bits());
    }

    #[test]
    fn failures_are_counted() {
        // n0 below d + 1 makes every recursive fit fail
        let report = run_replications(Model::One, 3, 5, 4, Estimator::SaveR, 1, &ExperimentConfig::default()).unwrap();
        assert_eq!(report.failures.len(), 4);
        assert!(report.records.is_empty());
        assert!(run_replications(Model::One, 100, 0, 0, Estimator::SaveR, 1, &ExperimentConfig::default()).is_err());
    }

    #[test]
    fn r2_in_unit_interval() {
        let report =
            run_replications(Model::One, 50, 10, 6, Estimator::SaveR, 11, &ExperimentConfig::default()).unwrap();
        assert!(report.records.iter().all(|r| (0.0..=1.0).contains(&r.r2)));
    }

    #[test]
    fn timing_degenerate_workload() {
        let rows = run_timing(Model::One, 60, &[0, 5], 1, 2, &ExperimentConfig::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.save_r.mean > 0.0 && r.save_nr.mean > 0.0));
    }
}
