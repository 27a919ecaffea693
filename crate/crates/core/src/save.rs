//! Truncated SAVE matrix assembly, direction extraction, and the two fitting
//! pipelines (recursive and batch).
//!
//! At every sample point the estimates are turned into ratios
//! `r̂ = ĝ / max(f̂, b_n)` and `R̂ = Ĝ / max(f̂, b_n)`, and the SAVE matrix is
//! the sample average of
//!
//! ```text
//! δ_kl − 2(R̂_kl − r̂_k r̂_l) + Σ_j (R̂_kj R̂_jl − R̂_kj r̂_j r̂_l − r̂_k r̂_j R̂_jl + r̂_k r̂_l r̂_j²)
//! ```
//!
//! which is `(I − M)²` with `M = R̂ − r̂ r̂ᵀ` the local conditional covariance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{inv_sqrt, packed_len, sample_covariance, sym_eigen, DenseMatrix, SymMatrix};
use crate::recursive::{batch_estimate, Estimate, EvalPoint, Observation, RecursiveState};
use crate::sequences::SequencePlan;

/// Eigenvalues of the sample covariance below this fraction of the largest
/// are treated as singular.
pub const COVARIANCE_FLOOR_RATIO: f64 = 1e-10;

#[inline]
pub fn truncate_density(f_hat: f64, b_n: f64) -> f64 {
    f_hat.max(b_n)
}

/// Per-point ratio estimates under truncation level `b_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioEstimates {
    dim: usize,
    b_n: f64,
    f_trunc: Vec<f64>,
    r: Vec<f64>,
    rr: Vec<f64>,
}

impl RatioEstimates {
    pub fn new(dim: usize, b_n: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(b_n.is_finite() && b_n > 0.0) {
            return Err(invalid("truncation level must be positive"));
        }
        Ok(Self { dim, b_n, f_trunc: Vec::new(), r: Vec::new(), rr: Vec::new() })
    }

    /// Adds one point from its density, first-moment and packed second-moment
    /// estimates.
    pub fn push(&mut self, f: f64, g: &[f64], gg: &[f64]) -> Result<()> {
        if g.len() != self.dim || gg.len() != packed_len(self.dim) {
            return Err(invalid("estimate has the wrong dimension"));
        }
        let ft = truncate_density(f, self.b_n);
        self.f_trunc.push(ft);
        self.r.extend(g.iter().map(|v| v / ft));
        self.rr.extend(gg.iter().map(|v| v / ft));
        Ok(())
    }

    pub fn from_points<'a>(dim: usize, b_n: f64, points: impl IntoIterator<Item = EvalPoint<'a>>) -> Result<Self> {
        let mut out = Self::new(dim, b_n)?;
        for p in points {
            out.push(p.f, p.g, p.gg)?;
        }
        Ok(out)
    }

    pub fn from_estimates<'a>(dim: usize, b_n: f64, estimates: impl IntoIterator<Item = &'a Estimate>) -> Result<Self> {
        let mut out = Self::new(dim, b_n)?;
        for e in estimates {
            out.push(e.f, &e.g, e.gg.packed())?;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn b_n(&self) -> f64 {
        self.b_n
    }

    pub fn len(&self) -> usize {
        self.f_trunc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_trunc.is_empty()
    }

    pub fn f_trunc(&self, i: usize) -> f64 {
        self.f_trunc[i]
    }

    pub fn r(&self, i: usize) -> &[f64] {
        &self.r[i * self.dim..(i + 1) * self.dim]
    }

    /// Packed upper triangle of `R̂` at point `i`.
    pub fn rr(&self, i: usize) -> &[f64] {
        let t = packed_len(self.dim);
        &self.rr[i * t..(i + 1) * t]
    }
}

/// Symmetric SAVE matrix estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SaveMatrix {
    pub n: usize,
    pub b_n: f64,
    pub lambda: SymMatrix,
}

impl SaveMatrix {
    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }
}

/// Averages `(I − M_i)²` over all points, `M_i = R̂(Y_i) − r̂(Y_i) r̂(Y_i)ᵀ`.
pub fn assemble_save(ratios: &RatioEstimates) -> Result<SaveMatrix> {
    if ratios.is_empty() {
        return Err(Error::NoData);
    }
    let d = ratios.dim();
    let mut acc = SymMatrix::zeros(d);
    // dense I − M, reused across points
    let mut a = vec![0.0; d * d];
    for i in 0..ratios.len() {
        let r = ratios.r(i);
        let rr = ratios.rr(i);
        let mut idx = 0;
        for k in 0..d {
            for l in k..d {
                let delta = if k == l { 1.0 } else { 0.0 };
                let v = delta - (rr[idx] - r[k] * r[l]);
                a[k * d + l] = v;
                a[l * d + k] = v;
                idx += 1;
            }
        }
        let packed = acc.packed_mut();
        let mut idx = 0;
        for k in 0..d {
            let row_k = &a[k * d..(k + 1) * d];
            for l in k..d {
                let row_l = &a[l * d..(l + 1) * d];
                packed[idx] += row_k.iter().zip(row_l).map(|(x, y)| x * y).sum::<f64>();
                idx += 1;
            }
        }
    }
    let n = ratios.len() as f64;
    for v in acc.packed_mut() {
        *v /= n;
    }
    if !acc.is_finite() {
        return Err(Error::NumericalFailure("SAVE matrix has non-finite entries".into()));
    }
    Ok(SaveMatrix { n: ratios.len(), b_n: ratios.b_n(), lambda: acc })
}

/// Leading eigen-directions of a SAVE matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EdrEstimate {
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors (columns) in the standardized scale.
    pub eigenvectors: DenseMatrix,
    /// First `N` directions mapped to the original predictor scale, unit
    /// length, `d × N`.
    pub directions: DenseMatrix,
}

impl EdrEstimate {
    pub fn retained(&self) -> usize {
        self.directions.cols()
    }

    /// Direction `j` in the original predictor scale.
    pub fn direction(&self, j: usize) -> Vec<f64> {
        self.directions.column(j)
    }

    /// Eigenvector `j` in the standardized scale.
    pub fn standardized_direction(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j)
    }
}

/// Flips `v` so its largest-magnitude component (first one on ties) is
/// positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn normalize(v: &mut [f64]) {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Eigendecomposes `save` and keeps the top `retained` directions. With
/// `back_transform = Some(W)` the directions are mapped as `W β` (for
/// `W = Σ̂^{-1/2}`, a direction on the original predictor scale) and
/// renormalized.
pub fn extract_directions(
    save: &SaveMatrix,
    retained: usize,
    back_transform: Option<&SymMatrix>,
) -> Result<EdrEstimate> {
    let d = save.dim();
    if retained == 0 || retained > d {
        return Err(invalid("number of retained directions must be in 1..=d"));
    }
    if back_transform.is_some_and(|w| w.dim() != d) {
        return Err(invalid("back-transform has the wrong dimension"));
    }
    let eig = sym_eigen(&save.lambda)?;
    let mut eigenvectors = eig.vectors;
    for j in 0..d {
        let mut v = eigenvectors.column(j);
        fix_sign(&mut v);
        eigenvectors.set_column(j, &v);
    }
    let mut directions = DenseMatrix::zeros(d, retained);
    for j in 0..retained {
        let v = eigenvectors.column(j);
        let mut mapped = match back_transform {
            Some(w) => w.mul_vec(&v),
            None => v,
        };
        normalize(&mut mapped);
        fix_sign(&mut mapped);
        directions.set_column(j, &mapped);
    }
    Ok(EdrEstimate { eigenvalues: eig.values, eigenvectors, directions })
}

/// Centering and whitening map `x ↦ W (z − μ)` with `W = Σ̂^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub whitening: SymMatrix,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], whitening: SymMatrix::identity(dim) }
    }

    /// Estimates mean and inverse square-root covariance from `data`.
    pub fn fit(data: &[Observation]) -> Result<Self> {
        let d = data.first().ok_or(Error::NoData)?.dim();
        let rows: Vec<&[f64]> = data.iter().map(|o| o.x.as_slice()).collect();
        let (mean, cov) = sample_covariance(&rows, d)?;
        let whitening = inv_sqrt(&cov, COVARIANCE_FLOOR_RATIO)?;
        Ok(Self { mean, whitening })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, obs: &Observation) -> Result<Observation> {
        if obs.dim() != self.dim() {
            return Err(invalid("observation dimension does not match the standardizer"));
        }
        let centered: Vec<f64> = obs.x.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok(Observation { y: obs.y, x: self.whitening.mul_vec(&centered) })
    }
}

/// How predictors are standardized before fitting.
#[derive(Debug, Clone, PartialEq)]
pub enum Standardization {
    /// Data are used as given (assumed centered with identity covariance).
    None,
    /// Estimate mean and covariance from the fitting sample.
    Estimate,
    /// Use a previously estimated map.
    Fixed(Standardizer),
}

impl Standardization {
    fn resolve(&self, data: &[Observation], dim: usize) -> Result<Standardizer> {
        let s = match self {
            Standardization::None => Standardizer::identity(dim),
            Standardization::Estimate => Standardizer::fit(data)?,
            Standardization::Fixed(s) => s.clone(),
        };
        if s.dim() != dim {
            return Err(invalid("standardizer dimension does not match the data"));
        }
        Ok(s)
    }
}

fn check_sample(data: &[Observation]) -> Result<usize> {
    let d = data.first().ok_or(Error::InsufficientData { needed: 2, got: 0 })?.dim();
    if d == 0 {
        return Err(invalid("predictor dimension must be at least 1"));
    }
    if data.len() < d + 1 {
        return Err(Error::InsufficientData { needed: d + 1, got: data.len() });
    }
    for obs in data {
        obs.check(d)?;
    }
    Ok(d)
}

/// Recursive SAVE fit that can keep absorbing observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveFit {
    state: RecursiveState,
    standardizer: Standardizer,
    retained: usize,
    save: SaveMatrix,
    edr: EdrEstimate,
}

impl RecursiveFit {
    pub fn state(&self) -> &RecursiveState {
        &self.state
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn retained(&self) -> usize {
        self.retained
    }

    pub fn save(&self) -> &SaveMatrix {
        &self.save
    }

    pub fn edr(&self) -> &EdrEstimate {
        &self.edr
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    /// Absorbs one raw observation (standardized with the frozen map) and
    /// refreshes the SAVE matrix and directions.
    pub fn update(&mut self, obs: &Observation) -> Result<()> {
        self.absorb(obs)?;
        self.refresh()
    }

    /// Absorbs one raw observation without reassembling the SAVE matrix.
    /// Call [`RecursiveFit::refresh`] before reading results again.
    pub fn absorb(&mut self, obs: &Observation) -> Result<()> {
        let z = self.standardizer.apply(obs)?;
        self.state.update(&z)
    }

    /// Recomputes ratios with `b_n` for the current count and reassembles.
    pub fn refresh(&mut self) -> Result<()> {
        let (save, edr) = assemble_from_state(&self.state, &self.standardizer, self.retained)?;
        self.save = save;
        self.edr = edr;
        Ok(())
    }

    /// Rebuilds a fit around an existing state (used when resuming from a
    /// checkpoint).
    pub fn from_state(state: RecursiveState, standardizer: Standardizer, retained: usize) -> Result<Self> {
        if standardizer.dim() != state.dim() {
            return Err(invalid("standardizer dimension does not match the state"));
        }
        let (save, edr) = assemble_from_state(&state, &standardizer, retained)?;
        Ok(Self { state, standardizer, retained, save, edr })
    }

    pub fn into_parts(self) -> (RecursiveState, Standardizer, usize) {
        (self.state, self.standardizer, self.retained)
    }
}

fn assemble_from_state(
    state: &RecursiveState,
    standardizer: &Standardizer,
    retained: usize,
) -> Result<(SaveMatrix, EdrEstimate)> {
    let b_n = state.plan().truncation_level(state.len().max(1))?;
    let ratios = RatioEstimates::from_points(state.dim(), b_n, state.points())?;
    let save = assemble_save(&ratios)?;
    let edr = extract_directions(&save, retained, Some(&standardizer.whitening))?;
    Ok((save, edr))
}

/// Builds the recursive estimator for `data` taken in order (closed form,
/// see [`RecursiveState::from_sample`]) and assembles the SAVE matrix with
/// `b_n` at the final count.
pub fn fit_recursive(
    data: &[Observation],
    plan: SequencePlan,
    kernel: Kernel,
    retained: usize,
    standardization: Standardization,
) -> Result<RecursiveFit> {
    let d = check_sample(data)?;
    let standardizer = standardization.resolve(data, d)?;
    let z = data.iter().map(|o| standardizer.apply(o)).collect::<Result<Vec<_>>>()?;
    let state = RecursiveState::from_sample(d, plan, kernel, &z)?;
    RecursiveFit::from_state(state, standardizer, retained)
}

/// Result of the non-recursive pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchFit {
    pub standardizer: Standardizer,
    pub bandwidth: f64,
    pub save: SaveMatrix,
    pub edr: EdrEstimate,
}

/// Batch kernel SAVE with bandwidth `h = n^{-c1}` and truncation `b_n` from
/// `plan`.
pub fn fit_batch(
    data: &[Observation],
    plan: SequencePlan,
    kernel: Kernel,
    retained: usize,
    standardization: Standardization,
) -> Result<BatchFit> {
    plan.validate()?;
    let h = plan.bandwidth(data.len().max(1))?;
    fit_batch_with_bandwidth(data, h, plan, kernel, retained, standardization)
}

/// Batch kernel SAVE with an explicit bandwidth; `plan` only supplies `b_n`.
pub fn fit_batch_with_bandwidth(
    data: &[Observation],
    bandwidth: f64,
    plan: SequencePlan,
    kernel: Kernel,
    retained: usize,
    standardization: Standardization,
) -> Result<BatchFit> {
    let d = check_sample(data)?;
    let standardizer = standardization.resolve(data, d)?;
    let z = data.iter().map(|o| standardizer.apply(o)).collect::<Result<Vec<_>>>()?;
    let b_n = plan.truncation_level(z.len())?;
    let mut ratios = RatioEstimates::new(d, b_n)?;
    for obs in &z {
        let e = batch_estimate(&z, bandwidth, kernel, obs.y)?;
        ratios.push(e.f, &e.g, e.gg.packed())?;
    }
    let save = assemble_save(&ratios)?;
    let edr = extract_directions(&save, retained, Some(&standardizer.whitening))?;
    Ok(BatchFit { standardizer, bandwidth, save, edr })
}
