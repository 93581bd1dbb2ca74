use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

use cggm::numerics::sample_covariance;
use cggm::pipeline::io::{
    read_matrix_csv, read_table_csv, sidecar_sampling_rate, write_matrix_csv,
};
use cggm::pipeline::run::{
    edges_to_csv, extract_edges, normalized_scores, EDGES_FILE, ESTIMATE_FILE, HEATMAP_FILE,
    MATRIX_FILE,
};
use cggm::pipeline::{
    load_panel, render_heatmap, run_pipeline, write_panel, InputFormat, RunConfig,
};
use cggm::simbench::{run_benchmark, BenchConfig, GeneratorSpec, ModelKind};
use cggm::solvers::{
    cross_validate_lambda, kfold_covariances, ledoit_wolf, log_lambda_grid, solve_penalized,
    LambdaPolicy, SolverConfig, SolverKind,
};
use cggm::spectral::{band_collapse, estimate_spectrum, partial_coherence_screen, FrequencyBand};
use cggm::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cggm",
    version,
    about = "Sparse connectivity estimation for multichannel recordings"
)]
struct Cli {
    /// Seed recorded in every output; drives all simulation randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Copula-transform every channel to standard normal scores.
    Transform(TransformArgs),
    /// Band-collapsed cross-spectral matrix of a panel.
    Spectrum(SpectrumArgs),
    /// Fit one solver to a covariance or sample matrix CSV.
    Estimate(EstimateArgs),
    /// Full run: transform, spectrum, band collapse, solver, artifacts.
    Pipeline(PipelineArgs),
    /// Replicated benchmark on synthetic sparse models.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Defaults to f64-binary for .bin/.f64 files, csv-long otherwise.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Hz; required for csv-long input.
    #[arg(long)]
    sampling_rate: Option<f64>,
}

impl InputArgs {
    fn format(&self) -> InputFormat {
        self.format
            .map(Into::into)
            .unwrap_or_else(|| InputFormat::from_path(&self.input))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    CsvLong,
    F64Binary,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::CsvLong => InputFormat::CsvLong,
            FormatArg::F64Binary => InputFormat::F64Binary,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Glasso,
    Spcov,
    LedoitWolf,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Glasso => SolverKind::Glasso,
            SolverArg::Spcov => SolverKind::Spcov,
            SolverArg::LedoitWolf => SolverKind::LedoitWolf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Cliques,
    Random,
    Both,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "csv-long")]
    output_format: FormatArg,
}

#[derive(Args)]
struct BandArgs {
    /// delta, theta, alpha, beta, gamma or full.
    #[arg(long, default_value = "full", conflicts_with_all = ["low", "high"])]
    band: String,
    /// Lower band edge in Hz; use with --high.
    #[arg(long, requires = "high")]
    low: Option<f64>,
    #[arg(long, requires = "low")]
    high: Option<f64>,
    #[arg(long, default_value_t = cggm::spectral::DEFAULT_TAPER_COUNT)]
    taper_count: usize,
}

impl BandArgs {
    fn band(&self, nyquist: f64) -> Result<FrequencyBand> {
        match (self.low, self.high) {
            (Some(low), Some(high)) => {
                let band = FrequencyBand::new(low, high, "custom")?;
                band.check_nyquist(nyquist)?;
                Ok(band)
            }
            _ => FrequencyBand::named(&self.band, nyquist),
        }
    }
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    band: BandArgs,
    /// Band-collapsed matrix CSV.
    #[arg(long)]
    output: PathBuf,
    /// Also write the partial-coherence screen here.
    #[arg(long)]
    screen_output: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    screen_ridge: f64,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "glasso")]
    solver: SolverArg,
    /// Fixed penalty; without it the penalty is cross-validated.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    #[arg(long, default_value_t = 0.01)]
    lambda_min: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_max: f64,
    #[arg(long, default_value_t = 10)]
    lambda_count: usize,
    #[arg(long, default_value_t = SolverConfig::default().max_outer_iters)]
    max_outer_iters: usize,
    #[arg(long, default_value_t = SolverConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().delta)]
    delta: f64,
    #[arg(long, default_value_t = SolverConfig::default().step_shrink)]
    step_shrink: f64,
}

impl SolverArgs {
    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda.unwrap_or(SolverConfig::default().lambda),
            max_outer_iters: self.max_outer_iters,
            tol: self.tol,
            delta: self.delta,
            step_shrink: self.step_shrink,
        }
    }

    fn lambda_policy(&self) -> LambdaPolicy {
        match self.lambda {
            Some(lambda) => LambdaPolicy::Fixed { lambda },
            None => LambdaPolicy::CrossValidated {
                folds: self.cv_folds,
                grid: log_lambda_grid(self.lambda_min, self.lambda_max, self.lambda_count),
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InputKind {
    /// A square covariance matrix with a label header.
    Covariance,
    /// One sample per row with a label header.
    Samples,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "covariance")]
    input_kind: InputKind,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0.0)]
    edge_threshold: f64,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// Re-run from a manifest or RunConfig JSON; other flags are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    sampling_rate: Option<f64>,
    #[command(flatten)]
    band: BandArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0.0)]
    edge_threshold: f64,
    #[arg(long)]
    screen_ridge: Option<f64>,
    #[arg(long, required_unless_present = "config")]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "both")]
    model: ModelArg,
    /// Comma-separated; defaults to all three.
    #[arg(long, value_enum, value_delimiter = ',')]
    solvers: Vec<SolverArg>,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 18)]
    p: usize,
    #[arg(long, default_value_t = 6)]
    block_size: usize,
    #[arg(long, default_value_t = 0.02)]
    edge_prob: f64,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    #[arg(long)]
    output_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
}
use Failure::{Runtime, Usage};

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Runtime(e)
    }
}

fn dispatch(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Transform(args) => transform(args)?,
        Command::Spectrum(args) => spectrum(args)?,
        Command::Estimate(args) => estimate(args)?,
        Command::Pipeline(args) => pipeline(args, cli.seed)?,
        Command::Simulate(args) => simulate(args, cli.seed)?,
    }
    Ok(())
}

fn transform(args: TransformArgs) -> Result<()> {
    let panel = load_panel(
        &args.input.input,
        args.input.format(),
        args.input.sampling_rate,
    )?;
    write_panel(
        &panel.gaussianized()?,
        &args.output,
        args.output_format.into(),
    )
}

fn spectrum(args: SpectrumArgs) -> Result<()> {
    let panel = load_panel(
        &args.input.input,
        args.input.format(),
        args.input.sampling_rate,
    )?;
    let band = args.band.band(panel.sampling_rate() / 2.0)?;
    let sd = estimate_spectrum(&panel, args.band.taper_count)?;
    write_matrix_csv(
        &band_collapse(&sd, &band)?,
        panel.channel_labels(),
        &args.output,
    )?;
    if let Some(path) = &args.screen_output {
        let screen = partial_coherence_screen(&sd, &band, args.screen_ridge)?;
        write_matrix_csv(&screen, panel.channel_labels(), path)?;
    }
    Ok(())
}

fn estimate(args: EstimateArgs) -> std::result::Result<(), Failure> {
    let solver: SolverKind = args.solver.solver.into();
    let cfg = args.solver.solver_config();
    let (result, labels, lambda) = match args.input_kind {
        InputKind::Covariance => {
            if solver == SolverKind::LedoitWolf {
                return Err(Usage("ledoit-wolf needs --input-kind samples".into()));
            }
            let lambda = args
                .solver
                .lambda
                .ok_or_else(|| Usage("a covariance input needs a fixed --lambda".into()))?;
            let (s, labels) = read_matrix_csv(&args.input)?;
            (
                solve_penalized(solver, &s, &cfg.with_lambda(lambda))?,
                labels,
                Some(lambda),
            )
        }
        InputKind::Samples => {
            let (rows, labels) = read_table_csv(&args.input)?;
            let p = labels.len();
            let data = Array2::from_shape_vec((rows.len(), p), rows.concat())
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            if solver == SolverKind::LedoitWolf {
                (ledoit_wolf(&data)?, labels, None)
            } else {
                let lambda = match args.solver.lambda_policy() {
                    LambdaPolicy::Fixed { lambda } => lambda,
                    LambdaPolicy::CrossValidated { folds, grid } => {
                        cross_validate_lambda(
                            &kfold_covariances(&data, folds)?,
                            &grid,
                            solver,
                            &cfg,
                        )?
                        .lambda
                    }
                };
                let s = sample_covariance(&data);
                (
                    solve_penalized(solver, &s, &cfg.with_lambda(lambda))?,
                    labels,
                    Some(lambda),
                )
            }
        }
    };
    let dir = &args.output_dir;
    fs::create_dir_all(dir).map_err(Error::from)?;
    let scores = normalized_scores(&result.estimate, result.estimate_kind)?;
    write_matrix_csv(&result.estimate, &labels, &dir.join(ESTIMATE_FILE))?;
    write_matrix_csv(&scores, &labels, &dir.join(MATRIX_FILE))?;
    let edges = extract_edges(&scores, &labels, args.edge_threshold);
    fs::write(dir.join(EDGES_FILE), edges_to_csv(&edges)).map_err(Error::from)?;
    render_heatmap(&scores, &dir.join(HEATMAP_FILE))?;
    let summary = serde_json::json!({
        "solver": solver.name(),
        "estimate_kind": result.estimate_kind,
        "lambda": lambda,
        "objective": result.objective,
        "iterations": result.iterations,
        "converged": result.converged,
        "shrinkage": result.shrinkage,
        "wall_time_seconds": result.wall_time,
    });
    fs::write(
        dir.join("result.json"),
        serde_json::to_vec_pretty(&summary).map_err(Error::from)?,
    )
    .map_err(Error::from)?;
    println!(
        "{} objective {} iterations {} converged {}",
        solver, result.objective, result.iterations, result.converged
    );
    Ok(())
}

fn read_run_config(path: &Path) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_slice(&fs::read(path)?)?;
    let config = value.get("config").cloned().unwrap_or(value);
    Ok(serde_json::from_value(config)?)
}

fn pipeline(args: PipelineArgs, seed: u64) -> std::result::Result<(), Failure> {
    let cfg = match &args.config {
        Some(path) => read_run_config(path)?,
        None => {
            let input = args.input.clone().expect("required by clap");
            let format = args
                .format
                .map(Into::into)
                .unwrap_or_else(|| InputFormat::from_path(&input));
            let rate = match (args.sampling_rate, format) {
                (Some(rate), _) => Some(rate),
                (None, InputFormat::F64Binary) => sidecar_sampling_rate(&input)?,
                (None, InputFormat::CsvLong) => None,
            };
            let rate =
                rate.ok_or_else(|| Usage("no sampling rate; pass --sampling-rate".into()))?;
            let band = args
                .band
                .band(rate / 2.0)
                .map_err(|e| Usage(e.to_string()))?;
            let mut cfg = RunConfig::new(
                input,
                args.output_dir.clone().expect("required by clap"),
                band,
            );
            cfg.format = format;
            cfg.sampling_rate = args.sampling_rate;
            cfg.solver = args.solver.solver.into();
            cfg.solver_config = args.solver.solver_config();
            cfg.lambda_policy = args.solver.lambda_policy();
            cfg.taper_count = args.band.taper_count;
            cfg.edge_threshold = args.edge_threshold;
            cfg.screen_ridge = args.screen_ridge;
            cfg.seed = seed;
            cfg
        }
    };
    if let Err(e) = cfg.validate() {
        return Err(Usage(e.to_string()));
    }
    let (analysis, _) = run_pipeline(&cfg)?;
    println!(
        "{} edges written to {} (lambda {:?}, converged {})",
        analysis.edges.len(),
        cfg.output_dir.display(),
        analysis.lambda,
        analysis.result.converged
    );
    Ok(())
}

fn simulate(args: SimulateArgs, seed: u64) -> std::result::Result<(), Failure> {
    let kinds: &[ModelKind] = match args.model {
        ModelArg::Cliques => &[ModelKind::Cliques],
        ModelArg::Random => &[ModelKind::Random],
        ModelArg::Both => &[ModelKind::Random, ModelKind::Cliques],
    };
    if args.block_size == 0 || !args.p.is_multiple_of(args.block_size) {
        return Err(Usage(format!(
            "--p {} is not a multiple of --block-size {}",
            args.p, args.block_size
        )));
    }
    let models: Vec<GeneratorSpec> = kinds
        .iter()
        .map(|&kind| GeneratorSpec {
            kind,
            p: args.p,
            block_size: args.block_size,
            n_blocks: args.p / args.block_size,
            edge_prob: args.edge_prob,
            seed: 0,
        })
        .collect();
    for m in &models {
        m.validate().map_err(|e| Usage(e.to_string()))?;
    }
    if args.reps == 0 {
        return Err(Usage("--reps must be at least 1".into()));
    }
    let solvers: Vec<SolverKind> = if args.solvers.is_empty() {
        SolverKind::ALL.to_vec()
    } else {
        args.solvers.iter().map(|&s| s.into()).collect()
    };
    let lambda_policy = match args.lambda {
        Some(lambda) => LambdaPolicy::Fixed { lambda },
        None => LambdaPolicy::CrossValidated {
            folds: args.cv_folds,
            grid: log_lambda_grid(0.01, 1.0, 10),
        },
    };
    let config = BenchConfig {
        models,
        solvers,
        n_samples: args.n,
        n_reps: args.reps,
        lambda_policy,
        solver_config: SolverConfig::default(),
        seed,
    };
    let report = run_benchmark(&config)?;
    let table = report.to_table();
    fs::create_dir_all(&args.output_dir).map_err(Error::from)?;
    fs::write(
        args.output_dir.join("bench_report.json"),
        serde_json::to_vec_pretty(&report).map_err(Error::from)?,
    )
    .map_err(Error::from)?;
    fs::write(args.output_dir.join("bench_report.txt"), &table).map_err(Error::from)?;
    print!("{table}");
    Ok(())
}
