//! Solvers for the L1-penalized Gaussian likelihood.
//!
//! Two objective forms are supported. The precision form
//! `-log det(T) + tr(S T) + lambda * |T|_1` is convex in the precision
//! matrix `T` and is solved by [`graphical_lasso`]. The covariance form
//! `log det(C) + tr(S C^-1) + lambda * |C|_1` is non-convex in the
//! covariance `C` and is solved by the majorize-minimize scheme in
//! [`spcov`]. [`ledoit_wolf`] is a closed-form shrinkage estimator working
//! from raw samples. The L1 norm runs over every entry, diagonal included.

mod cv;
mod glasso;
mod ledoit_wolf;
mod spcov;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SymMatrix;

pub use cv::{
    cross_validate_lambda, kfold_covariances, log_lambda_grid, CvOutcome, Fold, LambdaPolicy,
};
pub use glasso::{graphical_lasso, kkt_residual};
pub use ledoit_wolf::{ledoit_wolf, shrinkage_intensity, LedoitWolfFit};
pub use spcov::spcov;

/// Tuning for the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// L1 penalty weight.
    pub lambda: f64,
    pub max_outer_iters: usize,
    /// Relative change below which the outer loop stops.
    pub tol: f64,
    /// Smallest eigenvalue allowed in the SPCOV covariance estimate.
    pub delta: f64,
    /// Backtracking factor for SPCOV step sizes.
    pub step_shrink: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            max_outer_iters: 200,
            tol: 1e-6,
            delta: 1e-4,
            step_shrink: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "step_shrink must lie in (0, 1), got {}",
                self.step_shrink
            )));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_outer_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Which matrix a [`SolverResult`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Precision,
    Covariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Glasso,
    Spcov,
    LedoitWolf,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [
        SolverKind::Glasso,
        SolverKind::Spcov,
        SolverKind::LedoitWolf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Glasso => "glasso",
            SolverKind::Spcov => "spcov",
            SolverKind::LedoitWolf => "ledoit_wolf",
        }
    }

    /// Whether the solver takes a penalty weight.
    pub fn is_penalized(self) -> bool {
        !matches!(self, SolverKind::LedoitWolf)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glasso" => Ok(SolverKind::Glasso),
            "spcov" => Ok(SolverKind::Spcov),
            "ledoit_wolf" | "ledoit-wolf" | "lw" => Ok(SolverKind::LedoitWolf),
            other => Err(Error::InvalidArgument(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub estimate: SymMatrix,
    pub estimate_kind: EstimateKind,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds spent inside the solver.
    pub wall_time: f64,
    /// Objective after initialization and after every outer iteration.
    pub objective_history: Vec<f64>,
    /// Shrinkage intensity, for Ledoit-Wolf results.
    pub shrinkage: Option<f64>,
}

impl SolverResult {
    /// Fails with [`Error::MaxIterationsExceeded`] if the solver stopped early.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::MaxIterationsExceeded {
                iterations: self.iterations,
            })
        }
    }

    /// The estimate on the covariance scale.
    pub fn covariance(&self) -> Result<SymMatrix> {
        match self.estimate_kind {
            EstimateKind::Covariance => Ok(self.estimate.clone()),
            EstimateKind::Precision => self.estimate.invert(),
        }
    }

    /// The estimate on the precision scale.
    pub fn precision(&self) -> Result<SymMatrix> {
        match self.estimate_kind {
            EstimateKind::Precision => Ok(self.estimate.clone()),
            EstimateKind::Covariance => self.estimate.invert(),
        }
    }
}

/// `-log det(theta) + tr(s theta) + lambda * sum_ij |theta_ij|`.
pub fn objective_precision(theta: &SymMatrix, s: &SymMatrix, lambda: f64) -> Result<f64> {
    check_dims(theta, s)?;
    let log_det = theta.log_det()?;
    Ok(-log_det + s.trace_product(theta) + lambda * theta.l1_norm())
}

/// `log det(sigma) + tr(s sigma^-1) + lambda * sum_ij |sigma_ij|`.
pub fn objective_covariance(sigma: &SymMatrix, s: &SymMatrix, lambda: f64) -> Result<f64> {
    check_dims(sigma, s)?;
    let (log_det, inv) = sigma.log_det_and_inverse()?;
    Ok(log_det + s.trace_product(&inv) + lambda * sigma.l1_norm())
}

/// Runs a penalized solver on a covariance matrix.
pub fn solve_penalized(
    kind: SolverKind,
    s: &SymMatrix,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    match kind {
        SolverKind::Glasso => graphical_lasso(s, cfg),
        SolverKind::Spcov => spcov(s, cfg),
        SolverKind::LedoitWolf => Err(Error::InvalidArgument(
            "ledoit_wolf works from samples, not a covariance matrix".into(),
        )),
    }
}

pub(crate) fn check_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}
