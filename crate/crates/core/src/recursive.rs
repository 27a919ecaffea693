//! Online kernel estimates of `f(y)`, `g_j(y) = E[X_j | Y=y] f(y)` and
//! `G_kl(y) = E[X_k X_l | Y=y] f(y)`.
//!
//! Each new observation `(Y_{n+1}, X_{n+1})` updates every retained
//! estimate by
//!
//! ```text
//! θ_{n+1}(y) = (1 - γ_{n+1}) θ_n(y) + (γ_{n+1} / h_{n+1}) K((y - Y_{n+1}) / h_{n+1}) · Z_{n+1}
//! ```
//!
//! with `Z ∈ {1, X_j, X_k X_l}`. The estimates are kept at every sample point
//! `Y_i`. A point entering at step `n+1` starts from the closed form
//! `Σ_i w_{i,n+1} h_i^{-1} K((y - Y_i)/h_i) Z_i`, which is what the recursion
//! would have produced had the point been tracked from the start.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{packed_len, SymMatrix};
use crate::sequences::{SequencePlan, WeightLedger};

/// One `(y, x)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub x: Vec<f64>,
}

impl Observation {
    pub fn new(y: f64, x: Vec<f64>) -> Self {
        Self { y, x }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub(crate) fn check(&self, d: usize) -> Result<()> {
        if self.x.len() != d {
            return Err(invalid(format!("observation has dimension {}, expected {d}", self.x.len())));
        }
        if !self.y.is_finite() || self.x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("observation has non-finite entries"));
        }
        Ok(())
    }
}

/// Kernel estimates at a single response value.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub f: f64,
    pub g: Vec<f64>,
    pub gg: SymMatrix,
}

impl Estimate {
    fn zeros(d: usize) -> Self {
        Self { f: 0.0, g: vec![0.0; d], gg: SymMatrix::zeros(d) }
    }

    /// Adds `c · {1, x, x xᵀ}`.
    #[inline]
    fn accumulate(&mut self, c: f64, x: &[f64]) {
        self.f += c;
        for (g, xi) in self.g.iter_mut().zip(x) {
            *g += c * xi;
        }
        let packed = self.gg.packed_mut();
        let mut idx = 0;
        for (i, xi) in x.iter().enumerate() {
            let cxi = c * xi;
            for xj in &x[i..] {
                packed[idx] += cxi * xj;
                idx += 1;
            }
        }
    }
}

/// Borrowed view of the estimates held at one sample point.
#[derive(Debug, Clone, Copy)]
pub struct EvalPoint<'a> {
    pub y: f64,
    pub f: f64,
    pub g: &'a [f64],
    /// Packed upper triangle of `Ĝ`.
    pub gg: &'a [f64],
}

/// Recursive estimator state over all absorbed observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveState {
    dim: usize,
    plan: SequencePlan,
    kernel: Kernel,
    ledger: WeightLedger,
    /// Bandwidth used when observation `i` arrived.
    bandwidths: Vec<f64>,
    ys: Vec<f64>,
    xs: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    gg: Vec<f64>,
}

/// Raw storage of a [`RecursiveState`], used for checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct StateParts {
    pub dim: usize,
    pub plan: SequencePlan,
    pub kernel: Kernel,
    pub pi: f64,
    pub weights: Vec<f64>,
    pub bandwidths: Vec<f64>,
    pub ys: Vec<f64>,
    pub xs: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub gg: Vec<f64>,
}

impl RecursiveState {
    pub fn new(dim: usize, plan: SequencePlan, kernel: Kernel) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        plan.validate()?;
        Ok(Self {
            dim,
            plan,
            kernel,
            ledger: WeightLedger::new(),
            bandwidths: Vec::new(),
            ys: Vec::new(),
            xs: Vec::new(),
            f: Vec::new(),
            g: Vec::new(),
            gg: Vec::new(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of absorbed observations.
    #[inline]
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn plan(&self) -> &SequencePlan {
        &self.plan
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn ledger(&self) -> &WeightLedger {
        &self.ledger
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn observation(&self, i: usize) -> Observation {
        Observation { y: self.ys[i], x: self.x(i).to_vec() }
    }

    #[inline]
    fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    /// Estimates held at sample point `i`.
    pub fn point(&self, i: usize) -> EvalPoint<'_> {
        let d = self.dim;
        let t = packed_len(d);
        EvalPoint { y: self.ys[i], f: self.f[i], g: &self.g[i * d..(i + 1) * d], gg: &self.gg[i * t..(i + 1) * t] }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = EvalPoint<'_>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Absorbs one observation: every retained estimate takes one recursion
    /// step, then a new point is opened at `obs.y`. Costs `O(n d²)`.
    pub fn update(&mut self, obs: &Observation) -> Result<()> {
        obs.check(self.dim)?;
        let step = self.len() + 1;
        let gamma = self.plan.gamma(step)?;
        let h = self.plan.bandwidth(step)?;
        let decay = 1.0 - gamma;
        let coef = gamma / h;
        let radius = self.kernel.support_radius();
        let d = self.dim;
        let t = packed_len(d);

        for i in 0..self.len() {
            let u = (self.ys[i] - obs.y) / h;
            let k = if u.abs() < radius { self.kernel.evaluate(u) } else { 0.0 };
            let c = coef * k;
            self.f[i] = decay * self.f[i] + c;
            let g = &mut self.g[i * d..(i + 1) * d];
            let gg = &mut self.gg[i * t..(i + 1) * t];
            if c == 0.0 {
                g.iter_mut().for_each(|v| *v *= decay);
                gg.iter_mut().for_each(|v| *v *= decay);
                continue;
            }
            for (gj, xj) in g.iter_mut().zip(&obs.x) {
                *gj = decay * *gj + c * xj;
            }
            let mut idx = 0;
            for (a, xa) in obs.x.iter().enumerate() {
                let cxa = c * xa;
                for xb in &obs.x[a..] {
                    gg[idx] = decay * gg[idx] + cxa * xb;
                    idx += 1;
                }
            }
        }

        self.ledger.extend(gamma)?;
        self.bandwidths.push(h);
        self.ys.push(obs.y);
        self.xs.extend_from_slice(&obs.x);

        let fresh = self.evaluate_at(obs.y)?;
        self.f.push(fresh.f);
        self.g.extend_from_slice(&fresh.g);
        self.gg.extend_from_slice(fresh.gg.packed());
        Ok(())
    }

    /// State after absorbing `data` in order, built directly from the
    /// closed form at every sample point. Equal to `data.len()` calls of
    /// [`RecursiveState::update`] up to rounding, at the cost of one batch
    /// evaluation (`O(n² d²)`, about half the work of the update loop).
    pub fn from_sample(dim: usize, plan: SequencePlan, kernel: Kernel, data: &[Observation]) -> Result<Self> {
        let mut state = Self::new(dim, plan, kernel)?;
        let n = data.len();
        state.bandwidths.reserve(n);
        state.ys.reserve(n);
        state.xs.reserve(n * dim);
        for (i, obs) in data.iter().enumerate() {
            obs.check(dim)?;
            state.ledger.extend(plan.gamma(i + 1)?)?;
            state.bandwidths.push(plan.bandwidth(i + 1)?);
            state.ys.push(obs.y);
            state.xs.extend_from_slice(&obs.x);
        }
        let t = packed_len(dim);
        state.f.reserve(n);
        state.g.reserve(n * dim);
        state.gg.reserve(n * t);
        for j in 0..n {
            let e = state.evaluate_at(state.ys[j])?;
            state.f.push(e.f);
            state.g.extend_from_slice(&e.g);
            state.gg.extend_from_slice(e.gg.packed());
        }
        Ok(state)
    }

    /// Closed-form estimates at an arbitrary `y`:
    /// `Σ_i w_{i,n} h_i^{-1} K((y - Y_i)/h_i) · {1, X_i, X_i X_iᵀ}`.
    pub fn evaluate_at(&self, y: f64) -> Result<Estimate> {
        if self.is_empty() {
            return Err(Error::NoData);
        }
        let radius = self.kernel.support_radius();
        let mut out = Estimate::zeros(self.dim);
        for (i, (&w, &h)) in self.ledger.weights().iter().zip(&self.bandwidths).enumerate() {
            let u = (y - self.ys[i]) / h;
            if u.abs() >= radius || u.is_nan() {
                continue;
            }
            let c = w / h * self.kernel.evaluate(u);
            out.accumulate(c, self.x(i));
        }
        Ok(out)
    }

    pub fn into_parts(self) -> StateParts {
        StateParts {
            dim: self.dim,
            plan: self.plan,
            kernel: self.kernel,
            pi: self.ledger.pi(),
            weights: self.ledger.weights().to_vec(),
            bandwidths: self.bandwidths,
            ys: self.ys,
            xs: self.xs,
            f: self.f,
            g: self.g,
            gg: self.gg,
        }
    }

    /// Reassembles a state from stored parts after checking shapes.
    pub fn from_parts(parts: StateParts) -> Result<Self> {
        let StateParts { dim, plan, kernel, pi, weights, bandwidths, ys, xs, f, g, gg } = parts;
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        plan.validate()?;
        let n = ys.len();
        let shapes_ok = weights.len() == n
            && bandwidths.len() == n
            && xs.len() == n * dim
            && f.len() == n
            && g.len() == n * dim
            && gg.len() == n * packed_len(dim);
        if !shapes_ok {
            return Err(invalid("state parts have inconsistent lengths"));
        }
        let ledger = WeightLedger::from_parts(pi, weights)?;
        Ok(Self { dim, plan, kernel, ledger, bandwidths, ys, xs, f, g, gg })
    }
}

/// Non-recursive kernel estimate with a single bandwidth:
/// `n^{-1} Σ_i h^{-1} K((y - Y_i)/h) · {1, X_i, X_i X_iᵀ}`.
pub fn batch_estimate(observations: &[Observation], h: f64, kernel: Kernel, y: f64) -> Result<Estimate> {
    let first = observations.first().ok_or(Error::NoData)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid("bandwidth must be positive"));
    }
    let d = first.dim();
    let radius = kernel.support_radius();
    let scale = 1.0 / (observations.len() as f64 * h);
    let mut out = Estimate::zeros(d);
    for obs in observations {
        if obs.dim() != d {
            return Err(invalid("observations have mixed dimensions"));
        }
        let u = (y - obs.y) / h;
        if u.abs() >= radius || u.is_nan() {
            continue;
        }
        out.accumulate(scale * kernel.evaluate(u), &obs.x);
    }
    Ok(out)
}
