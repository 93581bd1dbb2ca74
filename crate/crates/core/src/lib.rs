//! Sparse connectivity estimation for multichannel time series.
//!
//! The pipeline Gaussianizes each channel with an empirical-CDF copula
//! transform, estimates trial-averaged multitaper cross-spectral density
//! matrices, collapses them over a frequency band and solves an
//! L1-penalized likelihood problem with one of three solvers:
//! graphical lasso, SPCOV (majorize-minimize) and Ledoit-Wolf shrinkage.
//! A simulation harness benchmarks the solvers on synthetic sparse models.

pub mod copula;
pub mod error;
pub mod numerics;
pub mod pipeline;
pub mod simbench;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};
pub use numerics::{HermMatrix, SymMatrix};
