//! End-to-end connectivity run: copula transform, spectrum, band collapse,
//! solver, artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::heatmap::render_heatmap;
use super::io::{load_panel, matrix_to_csv, InputFormat};
use super::panel::TimeSeriesPanel;
use crate::error::{Error, Result};
use crate::numerics::SymMatrix;
use crate::solvers::shrinkage_intensity;
use crate::solvers::{
    cross_validate_lambda, ledoit_wolf, solve_penalized, CvOutcome, EstimateKind, Fold,
    LambdaPolicy, SolverConfig, SolverKind, SolverResult,
};
use crate::spectral::{
    band_collapse, estimate_spectrum, partial_coherence_screen, trial_band_matrices, FrequencyBand,
    DEFAULT_TAPER_COUNT,
};

pub const MATRIX_FILE: &str = "connectivity.csv";
pub const ESTIMATE_FILE: &str = "estimate.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const HEATMAP_FILE: &str = "heatmap.png";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCREEN_FILE: &str = "screen.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    /// Required for CSV input; binary input may carry it in the sidecar.
    pub sampling_rate: Option<f64>,
    pub band: FrequencyBand,
    pub solver: SolverKind,
    pub solver_config: SolverConfig,
    /// Cross-validation folds are groups of whole trials.
    pub lambda_policy: LambdaPolicy,
    pub taper_count: usize,
    pub output_dir: PathBuf,
    pub edge_threshold: f64,
    /// When set, also writes the partial-coherence screen with this ridge.
    pub screen_ridge: Option<f64>,
    /// Recorded for reproducibility; the pipeline itself draws no random numbers.
    pub seed: u64,
}

impl RunConfig {
    pub fn new(
        input: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        band: FrequencyBand,
    ) -> Self {
        let input = input.into();
        Self {
            format: InputFormat::from_path(&input),
            input,
            sampling_rate: None,
            band,
            solver: SolverKind::Glasso,
            solver_config: SolverConfig::default(),
            lambda_policy: LambdaPolicy::default(),
            taper_count: DEFAULT_TAPER_COUNT,
            output_dir: output_dir.into(),
            edge_threshold: 0.0,
            screen_ridge: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.edge_threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "edge_threshold must be nonnegative, got {}",
                self.edge_threshold
            )));
        }
        if self.taper_count == 0 {
            return Err(Error::InvalidArgument(
                "taper_count must be positive".into(),
            ));
        }
        if let Some(r) = self.screen_ridge {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "screen ridge must be positive, got {r}"
                )));
            }
        }
        self.solver_config.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    pub i: usize,
    pub j: usize,
    pub score: f64,
}

/// Everything computed by a run, before it is written out.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub labels: Vec<String>,
    /// Solver input: band-collapsed spectrum, or the sample covariance of the
    /// Gaussianized samples for Ledoit-Wolf.
    pub input_matrix: SymMatrix,
    pub result: SolverResult,
    pub lambda: Option<f64>,
    pub cv: Option<CvOutcome>,
    /// Normalized scores with unit diagonal.
    pub connectivity: SymMatrix,
    pub edges: Vec<Edge>,
    pub screen: Option<SymMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    pub config: RunConfig,
    pub trials: usize,
    pub time_points: usize,
    pub channels: usize,
    pub channel_labels: Vec<String>,
    pub estimate_kind: EstimateKind,
    pub lambda: Option<f64>,
    pub cv_grid: Option<Vec<f64>>,
    pub cv_mean_scores: Option<Vec<f64>>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub shrinkage: Option<f64>,
    pub edge_count: usize,
    pub outputs: Vec<String>,
    pub timing: Timing,
}

/// The only manifest fields that differ between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub solver_seconds: f64,
}

/// Partial correlations for a precision estimate, correlations for a
/// covariance estimate. The diagonal is 1.
pub fn normalized_scores(estimate: &SymMatrix, kind: EstimateKind) -> Result<SymMatrix> {
    let p = estimate.dim();
    let d = estimate.diag();
    if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "estimate has nonpositive diagonal entry {i}"
        )));
    }
    let mut out = Array2::<f64>::eye(p);
    for i in 0..p {
        for j in (i + 1)..p {
            let r = estimate.get(i, j) / (d[i] * d[j]).sqrt();
            let v = match kind {
                EstimateKind::Precision => -r,
                EstimateKind::Covariance => r,
            };
            // No negative zeros in the written matrix.
            let v = if v == 0.0 { 0.0 } else { v };
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    SymMatrix::from_array(out)
}

/// Off-diagonal entries with `|score| > threshold`, in row-major order.
pub fn extract_edges(scores: &SymMatrix, labels: &[String], threshold: f64) -> Vec<Edge> {
    let p = scores.dim();
    let mut edges = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            let score = scores.get(i, j);
            if score.abs() > threshold {
                edges.push(Edge {
                    src: labels[i].clone(),
                    dst: labels[j].clone(),
                    i,
                    j,
                    score,
                });
            }
        }
    }
    edges
}

/// Trial-grouped folds of band-collapsed spectra.
fn trial_folds(per_trial: &[SymMatrix], k: usize) -> Result<Vec<Fold>> {
    let t = per_trial.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if t < k {
        return Err(Error::TooFewSamples { needed: k, got: t });
    }
    let mean = |idx: &mut dyn Iterator<Item = usize>| -> Result<SymMatrix> {
        let mut sum: Option<Array2<f64>> = None;
        let mut count = 0usize;
        for i in idx {
            let a = per_trial[i].as_array();
            match sum.as_mut() {
                Some(s) => *s += a,
                None => sum = Some(a.clone()),
            }
            count += 1;
        }
        SymMatrix::from_array(sum.expect("fold is nonempty") / count as f64)
    };
    (0..k)
        .map(|f| {
            let (lo, hi) = (f * t / k, (f + 1) * t / k);
            Ok(Fold {
                train: mean(&mut (0..t).filter(|&i| i < lo || i >= hi))?,
                test: mean(&mut (lo..hi))?,
            })
        })
        .collect()
}

/// Runs the estimation chain on an in-memory panel.
pub fn analyze_panel(panel: &TimeSeriesPanel, cfg: &RunConfig) -> Result<Analysis> {
    cfg.validate()?;
    cfg.band
        .check_nyquist(panel.sampling_rate() / 2.0)
        .map_err(|e| e.in_stage("spectrum"))?;
    let gauss = panel.gaussianized().map_err(|e| e.in_stage("transform"))?;
    let labels = panel.channel_labels().to_vec();

    let (input_matrix, result, lambda, cv) = if cfg.solver.is_penalized() {
        let sd = estimate_spectrum(&gauss, cfg.taper_count).map_err(|e| e.in_stage("spectrum"))?;
        let s = band_collapse(&sd, &cfg.band).map_err(|e| e.in_stage("spectrum"))?;
        let (lambda, cv) = match &cfg.lambda_policy {
            LambdaPolicy::Fixed { lambda } => (*lambda, None),
            LambdaPolicy::CrossValidated { folds, grid } => {
                let outcome = trial_band_matrices(&gauss, &cfg.band, cfg.taper_count)
                    .and_then(|per_trial| trial_folds(&per_trial, *folds))
                    .and_then(|f| cross_validate_lambda(&f, grid, cfg.solver, &cfg.solver_config))
                    .map_err(|e| e.in_stage("select_lambda"))?;
                (outcome.lambda, Some(outcome))
            }
        };
        let result = solve_penalized(cfg.solver, &s, &cfg.solver_config.with_lambda(lambda))
            .map_err(|e| e.in_stage("solve"))?;
        (s, result, Some(lambda), cv)
    } else {
        // Shrinkage needs individual samples, so it works on the
        // Gaussianized time samples rather than on the spectrum.
        let samples = gauss.stacked();
        let result = ledoit_wolf(&samples).map_err(|e| e.in_stage("solve"))?;
        let u = shrinkage_intensity(&samples)
            .map_err(|e| e.in_stage("solve"))?
            .sample_covariance;
        (u, result, None, None)
    };

    let connectivity = normalized_scores(&result.estimate, result.estimate_kind)
        .map_err(|e| e.in_stage("solve"))?;
    let edges = extract_edges(&connectivity, &labels, cfg.edge_threshold);
    let screen = match cfg.screen_ridge {
        Some(ridge) => Some(
            estimate_spectrum(&gauss, cfg.taper_count)
                .and_then(|sd| partial_coherence_screen(&sd, &cfg.band, ridge))
                .map_err(|e| e.in_stage("screen"))?,
        ),
        None => None,
    };
    Ok(Analysis {
        labels,
        input_matrix,
        result,
        lambda,
        cv,
        connectivity,
        edges,
        screen,
    })
}

pub fn edges_to_csv(edges: &[Edge]) -> String {
    let mut out = String::from("src,dst,score\n");
    for e in edges {
        out.push_str(&format!("{},{},{}\n", e.src, e.dst, e.score));
    }
    out
}

/// Loads the input, runs [`analyze_panel`] and writes every artifact into
/// `cfg.output_dir`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<(Analysis, RunManifest)> {
    let start = Instant::now();
    let panel =
        load_panel(&cfg.input, cfg.format, cfg.sampling_rate).map_err(|e| e.in_stage("load"))?;
    let analysis = analyze_panel(&panel, cfg)?;
    let manifest = write_outputs(&panel, cfg, &analysis, start).map_err(|e| e.in_stage("write"))?;
    Ok((analysis, manifest))
}

fn write_outputs(
    panel: &TimeSeriesPanel,
    cfg: &RunConfig,
    analysis: &Analysis,
    start: Instant,
) -> Result<RunManifest> {
    let dir: &Path = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let labels = &analysis.labels;
    let mut outputs = vec![MATRIX_FILE, ESTIMATE_FILE, EDGES_FILE, HEATMAP_FILE];
    fs::write(
        dir.join(MATRIX_FILE),
        matrix_to_csv(&analysis.connectivity, labels),
    )?;
    fs::write(
        dir.join(ESTIMATE_FILE),
        matrix_to_csv(&analysis.result.estimate, labels),
    )?;
    fs::write(dir.join(EDGES_FILE), edges_to_csv(&analysis.edges))?;
    render_heatmap(&analysis.connectivity, &dir.join(HEATMAP_FILE))?;
    if let Some(screen) = &analysis.screen {
        fs::write(dir.join(SCREEN_FILE), matrix_to_csv(screen, labels))?;
        outputs.push(SCREEN_FILE);
    }
    outputs.push(MANIFEST_FILE);

    let manifest = RunManifest {
        software: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        trials: panel.trial_count(),
        time_points: panel.time_points(),
        channels: panel.channel_count(),
        channel_labels: labels.clone(),
        estimate_kind: analysis.result.estimate_kind,
        lambda: analysis.lambda,
        cv_grid: analysis.cv.as_ref().map(|c| c.grid.clone()),
        cv_mean_scores: analysis.cv.as_ref().map(|c| c.mean_scores.clone()),
        objective: analysis.result.objective,
        iterations: analysis.result.iterations,
        converged: analysis.result.converged,
        shrinkage: analysis.result.shrinkage,
        edge_count: analysis.edges.len(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            solver_seconds: analysis.result.wall_time,
        },
    };
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(manifest)
}
