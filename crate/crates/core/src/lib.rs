//! Change-point detection for piecewise-constant signals in noise.
//!
//! The centerpiece is a two-stage pipeline: [`wbs2::wbs2_solution_path`]
//! ranks every possible split of the data by recursively re-drawing
//! candidate intervals inside each detected segment, and
//! [`sdll::sdll_select`] cuts that ranking at the steepest relative drop
//! onto noise-level statistics. [`sdll::detect`] wires the two together
//! with a robust noise-scale estimate.
//!
//! ```
//! use cpd_core::{detect, SdllConfig, TimeSeries, Wbs2Config};
//!
//! let data: Vec<f64> = (0..40).map(|t| if t < 20 { 0.0 } else { 4.0 }).collect();
//! let x = TimeSeries::new(data)?;
//! let model = detect(&x, &Wbs2Config::default(), &SdllConfig::default())?;
//! assert_eq!(model.locations, vec![20]);
//! # Ok::<(), cpd_core::Error>(())
//! ```
//!
//! Fixed-pool detectors ([`baselines`]), noise-scale estimators and
//! threshold-constant calibration ([`estimation`]), and a seeded benchmark
//! runner ([`simlab`]) round out the crate.

pub mod baselines;
pub mod dd;
mod error;
pub mod estimation;
pub mod rng;
pub mod sdll;
mod series;
pub mod simlab;
pub mod wbs2;

pub use error::{Error, Result};
pub use estimation::{calibrate_constant, constant_for, default_table, ConstantTable, Level};
pub use sdll::{detect, SdllConfig};
pub use series::{
    cusum_argmax, cusum_at, fit_piecewise_mean, ChangePointModel, Interval, PathEntry,
    SolutionPath, TimeSeries,
};
pub use wbs2::{median_run_ensemble, wbs2_solution_path, Wbs2Config};
