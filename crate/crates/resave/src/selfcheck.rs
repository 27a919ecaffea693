//! Fast oracle checks run by `resave selfcheck`.

use std::time::Instant;

use resave_core::linalg::{packed_len, sym_eigen, SymMatrix};
use resave_core::models::{generate, Model};
use resave_core::rng::Rng;
use resave_core::save::{fit_batch_with_bandwidth, fit_recursive, Standardization};
use resave_core::{Kernel, Observation, RecursiveState, SequencePlan, WeightLedger};

/// Knobs for fault injection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfcheckOptions {
    /// Multiplies the normalizing constant of the oracle's kernel. Any value
    /// other than 1 must make the recursion check fail.
    pub kernel_constant_scale: f64,
    pub seed: u64,
}

impl Default for SelfcheckOptions {
    fn default() -> Self {
        Self { kernel_constant_scale: 1.0, seed: 20_240_601 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Largest observed discrepancy.
    pub error: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, error: f64, tolerance: f64, detail: String) -> Self {
        Self { name, passed: error.is_finite() && error < tolerance, error, tolerance, detail }
    }

    fn failed(name: &'static str, tolerance: f64, detail: String) -> Self {
        Self { name, passed: false, error: f64::NAN, tolerance, detail }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<24} error={:.3e} tol={:.1e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.error,
            self.tolerance,
            self.detail
        )
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Epanechnikov kernel written out independently of the core crate.
fn oracle_kernel(u: f64, constant: f64) -> f64 {
    if u.abs() <= 1.0 {
        constant * (1.0 - u * u)
    } else {
        0.0
    }
}

/// `f̂_n`, `ĝ_n`, `Ĝ_n` at `y` as explicit weighted sums
/// `Σ_i w_{i,n} h_i^{-1} K((y - Y_i)/h_i) (1, X_i, X_i X_iᵀ)`, with
/// `w_{i,n} = γ_i ∏_{k>i}(1 - γ_k)` built from the products directly.
fn closed_form(data: &[Observation], plan: &SequencePlan, y: f64, constant: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let n = data.len();
    let d = data[0].x.len();
    let gammas: Vec<f64> = (1..=n).map(|i| (plan.gamma_scale / i as f64).min(1.0)).collect();
    let mut f = 0.0;
    let mut g = vec![0.0; d];
    let mut gg = vec![0.0; packed_len(d)];
    for (i, obs) in data.iter().enumerate() {
        let w = gammas[i] * gammas[i + 1..].iter().map(|g| 1.0 - g).product::<f64>();
        let h = ((i + 1) as f64).powf(-plan.c1);
        let k = w * oracle_kernel((y - obs.y) / h, constant) / h;
        f += k;
        let mut idx = 0;
        for (a, xa) in obs.x.iter().enumerate() {
            g[a] += k * xa;
            for xb in &obs.x[a..] {
                gg[idx] += k * xa * xb;
                idx += 1;
            }
        }
    }
    (f, g, gg)
}

fn recursion_vs_closed_form(options: &SelfcheckOptions) -> CheckResult {
    const NAME: &str = "recursion-closed-form";
    const TOL: f64 = 1e-10;
    let plan = SequencePlan::default();
    let data = generate(Model::One, 120, &mut Rng::stream(options.seed, 1));
    let mut state = match RecursiveState::new(5, plan, Kernel::Epanechnikov) {
        Ok(s) => s,
        Err(e) => return CheckResult::failed(NAME, TOL, e.to_string()),
    };
    let constant = 0.75 * options.kernel_constant_scale;
    let mut worst: f64 = 0.0;
    for (n, obs) in data.iter().enumerate() {
        if let Err(e) = state.update(obs) {
            return CheckResult::failed(NAME, TOL, e.to_string());
        }
        if (n + 1) % 20 != 0 {
            continue;
        }
        for (j, point) in state.points().enumerate() {
            let (f, g, gg) = closed_form(&data[..=n], &plan, data[j].y, constant);
            worst = worst.max(rel_diff(point.f, f));
            worst = g.iter().zip(point.g).fold(worst, |m, (a, b)| m.max(rel_diff(*b, *a)));
            worst = gg.iter().zip(point.gg).fold(worst, |m, (a, b)| m.max(rel_diff(*b, *a)));
        }
    }
    CheckResult::new(NAME, worst, TOL, format!("n={} d=5 points checked every 20 updates", data.len()))
}

fn weight_sum_identity() -> CheckResult {
    const TOL: f64 = 1e-12;
    let mut worst: f64 = 0.0;
    for gamma_scale in [1.0, 0.5, 0.8] {
        let plan = SequencePlan { gamma_scale, ..SequencePlan::default() };
        let mut ledger = WeightLedger::new();
        for n in 1..=10_000usize {
            let gamma = match plan.gamma(n) {
                Ok(g) => g,
                Err(e) => return CheckResult::failed("weight-sum-identity", TOL, e.to_string()),
            };
            if let Err(e) = ledger.extend(gamma) {
                return CheckResult::failed("weight-sum-identity", TOL, e.to_string());
            }
            if n % 500 == 0 || n < 20 {
                let sum: f64 = ledger.weights().iter().sum();
                worst = worst.max((sum - (1.0 - ledger.pi())).abs());
            }
        }
    }
    CheckResult::new("weight-sum-identity", worst, TOL, "gamma_scale in {1, 0.5, 0.8}, n <= 10000".into())
}

fn batch_bridge(options: &SelfcheckOptions) -> CheckResult {
    const NAME: &str = "batch-bridge";
    const TOL: f64 = 1e-10;
    // gamma_i = 1/i and a constant unit bandwidth make the recursive
    // estimator an ordinary kernel average.
    let plan = SequencePlan { c1: 0.0, ..SequencePlan::default() };
    let data = generate(Model::Two, 200, &mut Rng::stream(options.seed, 2));
    let outcome = (|| {
        let r = fit_recursive(&data, plan, Kernel::Epanechnikov, 2, Standardization::Estimate)?;
        let b = fit_batch_with_bandwidth(&data, 1.0, plan, Kernel::Epanechnikov, 2, Standardization::Estimate)?;
        let lambda =
            r.save().lambda.packed().iter().zip(b.save.lambda.packed()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dirs = r
            .edr()
            .directions
            .as_slice()
            .iter()
            .zip(b.edr.directions.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        resave_core::Result::Ok(lambda.max(dirs))
    })();
    match outcome {
        Ok(err) => CheckResult::new(NAME, err, TOL, "c1=0, h=1, gamma_i=1/i, n=200".into()),
        Err(e) => CheckResult::failed(NAME, TOL, e.to_string()),
    }
}

fn eigen_reconstruction(options: &SelfcheckOptions) -> CheckResult {
    const NAME: &str = "eigen-reconstruction";
    const TOL: f64 = 1e-9;
    let mut rng = Rng::stream(options.seed, 3);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let d = 1 + trial % 10;
        let mut m = SymMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                m.set(i, j, rng.standard_normal());
            }
        }
        let eig = match sym_eigen(&m) {
            Ok(e) => e,
            Err(e) => return CheckResult::failed(NAME, TOL, e.to_string()),
        };
        let back = eig.reconstruct_with(|v| v);
        let diff: f64 = back.packed().iter().zip(m.packed()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst = worst.max(diff / m.frobenius_norm().max(f64::MIN_POSITIVE));
    }
    CheckResult::new(NAME, worst, TOL, "50 random symmetric matrices, d <= 10".into())
}

/// Runs every check.
pub fn run(options: &SelfcheckOptions) -> (Vec<CheckResult>, f64) {
    let start = Instant::now();
    let results = vec![
        recursion_vs_closed_form(options),
        weight_sum_identity(),
        batch_bridge(options),
        eigen_reconstruction(options),
    ];
    (results, start.elapsed().as_secs_f64())
}
