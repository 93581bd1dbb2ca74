//! Synthetic sparse covariance models and the replicated solver benchmark.
//!
//! Two truth generators are provided: a block-diagonal "cliques" model and
//! a "random" model whose off-diagonal entries are nonzero independently
//! with a fixed probability. Each replication draws a fresh truth, samples
//! from it, runs every requested solver and scores the covariance-scale
//! estimate by RMSE (`|C_hat - C|_F / p`) and entropy loss
//! (`-log det(C_hat C^-1) + tr(C_hat C^-1) - p`).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sample_covariance, SymMatrix};
pub use crate::solvers::LambdaPolicy;
use crate::solvers::{
    cross_validate_lambda, kfold_covariances, ledoit_wolf, solve_penalized, SolverConfig,
    SolverKind, SolverResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Cliques,
    Random,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cliques => "cliques",
            ModelKind::Random => "random",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cliques" => Ok(ModelKind::Cliques),
            "random" => Ok(ModelKind::Random),
            other => Err(Error::InvalidArgument(format!("unknown model {other:?}"))),
        }
    }
}

/// Parameters of a synthetic truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: ModelKind,
    pub p: usize,
    pub block_size: usize,
    pub n_blocks: usize,
    pub edge_prob: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Three dense 6 x 6 blocks.
    pub fn cliques(seed: u64) -> Self {
        Self {
            kind: ModelKind::Cliques,
            p: 18,
            block_size: 6,
            n_blocks: 3,
            edge_prob: 0.02,
            seed,
        }
    }

    /// 18 variables, each pair linked with probability 0.02.
    pub fn random(seed: u64) -> Self {
        Self {
            kind: ModelKind::Random,
            ..Self::cliques(seed)
        }
    }

    pub fn for_kind(kind: ModelKind, seed: u64) -> Self {
        match kind {
            ModelKind::Cliques => Self::cliques(seed),
            ModelKind::Random => Self::random(seed),
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidArgument("p must be positive".into()));
        }
        match self.kind {
            ModelKind::Cliques => {
                if self.block_size * self.n_blocks != self.p {
                    return Err(Error::DimensionMismatch {
                        expected: self.p,
                        found: self.block_size * self.n_blocks,
                    });
                }
            }
            ModelKind::Random => {
                if !(self.edge_prob > 0.0 && self.edge_prob < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "edge_prob must lie in (0, 1), got {}",
                        self.edge_prob
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<SymMatrix> {
        match self.kind {
            ModelKind::Cliques => gen_cliques(self),
            ModelKind::Random => gen_random(self),
        }
    }
}

/// Block-diagonal truth with blocks `A'A / block_size + 0.1 I`.
pub fn gen_cliques(spec: &GeneratorSpec) -> Result<SymMatrix> {
    if spec.kind != ModelKind::Cliques {
        return Err(Error::InvalidArgument("spec is not a cliques model".into()));
    }
    spec.validate()?;
    let b = spec.block_size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sigma = Array2::<f64>::zeros((spec.p, spec.p));
    for block in 0..spec.n_blocks {
        let a = Array2::from_shape_fn((b, b), |_| StandardNormal.sample(&mut rng));
        let mut bb: Array2<f64> = a.t().dot(&a) / b as f64;
        for i in 0..b {
            bb[[i, i]] += 0.1;
        }
        let off = block * b;
        sigma
            .slice_mut(ndarray::s![off..off + b, off..off + b])
            .assign(&bb);
    }
    SymMatrix::from_array(sigma)
}

/// Sparse truth: each upper-triangle entry is nonzero with probability
/// `edge_prob`, magnitude uniform in `[0.3, 0.8]` with a random sign; the
/// diagonal is `1 + |most negative eigenvalue of the off-diagonal part| + 0.1`.
pub fn gen_random(spec: &GeneratorSpec) -> Result<SymMatrix> {
    if spec.kind != ModelKind::Random {
        return Err(Error::InvalidArgument("spec is not a random model".into()));
    }
    spec.validate()?;
    let p = spec.p;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut off = SymMatrix::zeros(p);
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.random::<f64>() < spec.edge_prob {
                let magnitude = rng.random_range(0.3..=0.8);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                off.set(i, j, sign * magnitude);
            }
        }
    }
    let most_negative = off.min_eigenvalue().min(0.0);
    let sigma = off.add_identity(1.0 + most_negative.abs() + 0.1);
    sigma.cholesky()?;
    Ok(sigma)
}

/// `n` i.i.d. rows from `N(0, sigma)`.
pub fn sample_mvn(sigma: &SymMatrix, n: usize, seed: u64) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let l = sigma.cholesky()?;
    let p = sigma.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
    Ok(z.dot(&l.t()))
}

/// `|est - truth|_F / p`.
pub fn rmse(est: &SymMatrix, truth: &SymMatrix) -> Result<f64> {
    if est.dim() != truth.dim() {
        return Err(Error::DimensionMismatch {
            expected: truth.dim(),
            found: est.dim(),
        });
    }
    Ok(est.sub(truth).frobenius_norm() / truth.dim() as f64)
}

/// `-log det(est truth^-1) + tr(est truth^-1) - p`.
pub fn entropy_loss(est: &SymMatrix, truth: &SymMatrix) -> Result<f64> {
    if est.dim() != truth.dim() {
        return Err(Error::DimensionMismatch {
            expected: truth.dim(),
            found: est.dim(),
        });
    }
    let (truth_log_det, truth_inv) = truth.log_det_and_inverse()?;
    let est_log_det = est.log_det()?;
    let p = truth.dim() as f64;
    Ok(-(est_log_det - truth_log_det) + est.trace_product(&truth_inv) - p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub models: Vec<GeneratorSpec>,
    pub solvers: Vec<SolverKind>,
    pub n_samples: usize,
    pub n_reps: usize,
    pub lambda_policy: LambdaPolicy,
    pub solver_config: SolverConfig,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            models: vec![GeneratorSpec::random(0), GeneratorSpec::cliques(0)],
            solvers: SolverKind::ALL.to_vec(),
            n_samples: 200,
            n_reps: 1000,
            lambda_policy: LambdaPolicy::default(),
            solver_config: SolverConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`; zero for one value.
    pub se: f64,
}

impl MeanSe {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, se: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            se: (var / n as f64).sqrt(),
        }
    }
}

impl fmt::Display for MeanSe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4e} ± {:.2e}", self.mean, self.se)
    }
}

/// Metrics of one solver on one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepMetrics {
    pub rmse: f64,
    pub entropy_loss: f64,
    /// Seconds for the whole estimator, penalty selection included.
    pub exec_time: f64,
    /// Seconds for the final fit alone.
    pub fit_time: f64,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model: ModelKind,
    pub solver: SolverKind,
    pub replications: usize,
    pub failed: usize,
    pub rmse: MeanSe,
    pub entropy_loss: MeanSe,
    pub exec_time_seconds: MeanSe,
    pub fit_time_seconds: MeanSe,
    pub lambda: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    /// Raw per-replication metrics, `None` where the solver failed.
    /// Indexed `[row][replication]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw: Vec<Vec<Option<RepMetrics>>>,
}

impl BenchReport {
    pub fn row(&self, model: ModelKind, solver: SolverKind) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.solver == solver)
    }

    /// Aligned text table: model, solver, rmse, entropy loss, time.
    pub fn to_table(&self) -> String {
        let header = [
            "model".to_string(),
            "solver".to_string(),
            "reps".to_string(),
            "rmse mean ± se".to_string(),
            "entropy loss mean ± se".to_string(),
            "time (s) mean ± se".to_string(),
        ];
        let mut lines: Vec<[String; 6]> = vec![header];
        for r in &self.rows {
            lines.push([
                r.model.to_string(),
                r.solver.to_string(),
                if r.failed > 0 {
                    format!("{} ({} failed)", r.replications, r.failed)
                } else {
                    r.replications.to_string()
                },
                r.rmse.to_string(),
                r.entropy_loss.to_string(),
                r.exec_time_seconds.to_string(),
            ]);
        }
        let widths: Vec<usize> = (0..6)
            .map(|c| {
                lines
                    .iter()
                    .map(|l| l[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for (k, line) in lines.iter().enumerate() {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(cell, &w)| format!("{cell:<w$}"))
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
            if k == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                out.push_str(&"-".repeat(total));
                out.push('\n');
            }
        }
        out
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-(model, replication, stream) seed.
pub fn derive_seed(master: u64, model: usize, rep: usize, stream: u64) -> u64 {
    mix(mix(mix(master ^ mix(model as u64)) ^ rep as u64) ^ stream)
}

/// Runs one estimator on one sample, returning the covariance-scale estimate.
pub fn run_estimator(
    solver: SolverKind,
    data: &Array2<f64>,
    policy: &LambdaPolicy,
    cfg: &SolverConfig,
) -> Result<(SymMatrix, RepMetrics, SolverResult)> {
    let start = Instant::now();
    let (result, lambda) = match solver {
        SolverKind::LedoitWolf => (ledoit_wolf(data)?, None),
        _ => {
            let lambda = match policy {
                LambdaPolicy::Fixed { lambda } => *lambda,
                LambdaPolicy::CrossValidated { folds, grid } => {
                    let folds = kfold_covariances(data, *folds)?;
                    cross_validate_lambda(&folds, grid, solver, cfg)?.lambda
                }
            };
            let s = sample_covariance(data);
            (
                solve_penalized(solver, &s, &cfg.with_lambda(lambda))?,
                Some(lambda),
            )
        }
    };
    let exec_time = start.elapsed().as_secs_f64();
    let result = result.require_converged()?;
    let cov = result.covariance()?;
    let metrics = RepMetrics {
        rmse: f64::NAN,
        entropy_loss: f64::NAN,
        exec_time,
        fit_time: result.wall_time,
        lambda,
    };
    Ok((cov, metrics, result))
}

/// Replicated benchmark over every (model, solver) pair.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    run_benchmark_with(config, true)
}

/// As [`run_benchmark`]; `keep_raw` retains per-replication metrics.
pub fn run_benchmark_with(config: &BenchConfig, keep_raw: bool) -> Result<BenchReport> {
    if config.n_reps == 0 {
        return Err(Error::InvalidArgument("n_reps must be at least 1".into()));
    }
    if config.solvers.is_empty() || config.models.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one model and one solver".into(),
        ));
    }
    config.solver_config.validate()?;
    for m in &config.models {
        m.validate()?;
    }

    let mut raw: Vec<Vec<Option<RepMetrics>>> =
        vec![Vec::with_capacity(config.n_reps); config.models.len() * config.solvers.len()];

    for (mi, model) in config.models.iter().enumerate() {
        for rep in 0..config.n_reps {
            let truth_seed = derive_seed(config.seed ^ model.seed, mi, rep, 0);
            let sample_seed = derive_seed(config.seed ^ model.seed, mi, rep, 1);
            let truth = model.with_seed(truth_seed).generate()?;
            let data = sample_mvn(&truth, config.n_samples, sample_seed)?;
            for (si, &solver) in config.solvers.iter().enumerate() {
                let outcome =
                    run_estimator(solver, &data, &config.lambda_policy, &config.solver_config)
                        .and_then(|(cov, mut metrics, _)| {
                            metrics.rmse = rmse(&cov, &truth)?;
                            metrics.entropy_loss = entropy_loss(&cov, &truth)?;
                            Ok(metrics)
                        });
                raw[mi * config.solvers.len() + si].push(outcome.ok());
            }
        }
    }

    let mut rows = Vec::new();
    for (mi, model) in config.models.iter().enumerate() {
        for (si, &solver) in config.solvers.iter().enumerate() {
            let reps = &raw[mi * config.solvers.len() + si];
            let ok: Vec<&RepMetrics> = reps.iter().flatten().collect();
            let collect = |f: fn(&RepMetrics) -> f64| {
                MeanSe::from_values(&ok.iter().map(|m| f(m)).collect::<Vec<_>>())
            };
            let lambdas: Vec<f64> = ok.iter().filter_map(|m| m.lambda).collect();
            rows.push(BenchRow {
                model: model.kind,
                solver,
                replications: ok.len(),
                failed: reps.len() - ok.len(),
                rmse: collect(|m| m.rmse),
                entropy_loss: collect(|m| m.entropy_loss),
                exec_time_seconds: collect(|m| m.exec_time),
                fit_time_seconds: collect(|m| m.fit_time),
                lambda: MeanSe::from_values(&lambdas),
            });
        }
    }

    Ok(BenchReport {
        config: config.clone(),
        rows,
        raw: if keep_raw { raw } else { Vec::new() },
    })
}
