//! Synthetic single-index models and direction-recovery criteria.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::recursive::Observation;
use crate::rng::Rng;

/// Predictor dimension of both models.
pub const MODEL_DIM: usize = 5;

/// `X ~ N(0, I₅)`, `ε ~ N(0, 1)`, `s = X₁ + X₂ + X₃ + X₄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// `Y = s + ε`
    One,
    /// `Y = s³ + ε`
    Two,
}

impl Model {
    pub fn dim(self) -> usize {
        MODEL_DIM
    }

    /// `(1, 1, 1, 1, 0)`.
    pub fn beta_true(self) -> Vec<f64> {
        vec![1.0, 1.0, 1.0, 1.0, 0.0]
    }

    /// Response for predictor `x` and noise `eps`.
    pub fn respond(self, x: &[f64], eps: f64) -> f64 {
        let s: f64 = x[..4].iter().sum();
        match self {
            Model::One => s + eps,
            Model::Two => s * s * s + eps,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::One => "model1",
            Model::Two => "model2",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "model1" => Ok(Model::One),
            "2" | "model2" => Ok(Model::Two),
            _ => Err(invalid("unknown model (expected 1 or 2)")),
        }
    }
}

/// Draws `n` observations. Each draws five predictor normals, then the noise.
pub fn generate(model: Model, n: usize, rng: &mut Rng) -> Vec<Observation> {
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..MODEL_DIM).map(|_| rng.standard_normal()).collect();
            let eps = rng.standard_normal();
            Observation::new(model.respond(&x, eps), x)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared cosine of the angle between `beta_hat` and `beta`.
pub fn r_squared(beta_hat: &[f64], beta: &[f64]) -> Result<f64> {
    if beta_hat.len() != beta.len() {
        return Err(invalid("vectors have different lengths"));
    }
    let bb = dot(beta, beta);
    let hh = dot(beta_hat, beta_hat);
    if bb == 0.0 || hh == 0.0 {
        return Err(invalid("direction must be nonzero"));
    }
    let c = dot(beta_hat, beta);
    Ok((c * c / (hh * bb)).clamp(0.0, 1.0))
}

/// Squared cosine between `(β₁x₁, …, β_d x_d)` and `(β̂₁x₁, …, β̂_d x_d)`.
/// Returns `Ok(None)` when either scaled vector vanishes.
pub fn r_squared_projected(beta_hat: &[f64], beta: &[f64], x: &[f64]) -> Result<Option<f64>> {
    if beta_hat.len() != beta.len() || x.len() != beta.len() {
        return Err(invalid("vectors have different lengths"));
    }
    let a: Vec<f64> = beta.iter().zip(x).map(|(b, xi)| b * xi).collect();
    let b: Vec<f64> = beta_hat.iter().zip(x).map(|(b, xi)| b * xi).collect();
    match r_squared(&b, &a) {
        Ok(v) => Ok(Some(v)),
        Err(_) => Ok(None),
    }
}
