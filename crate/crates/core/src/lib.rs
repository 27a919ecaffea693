//! Recursive kernel sliced average variance estimation.
//!
//! The crate estimates the SAVE matrix `E[(I - cov(X | Y))^2]` of a
//! standardized predictor `X` given a scalar response `Y`, using kernel
//! estimates of `f(y)`, `E[X 1{Y=y}]` and `E[X Xᵀ 1{Y=y}]` that are updated
//! one observation at a time by stochastic approximation. A non-recursive
//! (batch) kernel baseline is provided alongside, and the leading eigenvectors
//! of either estimate give the effective dimension-reduction directions.
//!
//! The crate is `no_std` and only needs `alloc`. IO, timing and the command
//! line live in the companion `resave` crate.
//!
//! ```
//! use resave_core::models::{generate, Model};
//! use resave_core::rng::Rng;
//! use resave_core::save::{fit_recursive, Standardization};
//! use resave_core::{Kernel, SequencePlan};
//!
//! let mut rng = Rng::new(7);
//! let data = generate(Model::One, 200, &mut rng);
//! let fit = fit_recursive(
//!     &data,
//!     SequencePlan::default(),
//!     Kernel::Epanechnikov,
//!     1,
//!     Standardization::Estimate,
//! )?;
//! assert_eq!(fit.edr().retained(), 1);
//! # Ok::<(), resave_core::Error>(())
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod kernels;
pub mod linalg;
pub mod models;
pub mod recursive;
pub mod rng;
pub mod save;
pub mod sequences;

pub use error::{Error, Result};
pub use kernels::Kernel;
pub use linalg::{DenseMatrix, SymMatrix};
pub use recursive::{Estimate, Observation, RecursiveState};
pub use save::{EdrEstimate, RatioEstimates, SaveMatrix, Standardizer};
pub use sequences::{SequencePlan, WeightLedger};
