//! Command line interface.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use amfshrink_core::detector::{amf_statistic, threshold_for_alpha};
use amfshrink_core::estimators::{EstimatorSpec, SampleSpectrum, ShrinkageCovariance, UpperClip};
use amfshrink_core::sampling::TrainingSet;
use amfshrink_core::{CVector, Field, HermitianMatrix};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::compare::compare_estimators;
use crate::config::ExperimentConfig;
use crate::converge::convergence_study;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, run_roc, RunOptions};
use crate::matrix_io::{read_matrix, write_matrix, MatrixData, MatrixFormat};

#[derive(Debug, Parser)]
#[command(
    name = "amfshrink",
    version,
    about = "Nonlinear shrinkage and adaptive matched filter experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Shrink the spectrum of a training matrix or sample covariance.
    Estimate(EstimateArgs),
    /// Evaluate the AMF statistic on one observation.
    Detect(DetectArgs),
    /// ROC records over a threshold grid.
    Roc(RunArgs),
    /// Aggregated experiment records.
    Experiment(RunArgs),
    /// Paired estimator comparison.
    Compare(RunArgs),
    /// Deviation from the limiting rates along a size ladder.
    Converge(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Lw,
    DiagonalLoading,
    Sample,
}

#[derive(Debug, Args)]
struct EstimatorArgs {
    #[arg(long, value_enum, default_value = "lw")]
    method: Method,
    /// Lower clip for lw.
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// Upper clip rule for lw: sample-max or edge-scaled.
    #[arg(long, default_value = "sample-max")]
    upper_clip: UpperClip,
    /// Loading for diagonal-loading; default 0.1 tr(S)/p.
    #[arg(long)]
    beta: Option<f64>,
}

impl EstimatorArgs {
    fn spec(&self) -> EstimatorSpec {
        match self.method {
            Method::Lw => EstimatorSpec::Lw {
                t0: self.t0,
                upper: self.upper_clip,
            },
            Method::DiagonalLoading => EstimatorSpec::DiagonalLoading { beta: self.beta },
            Method::Sample => EstimatorSpec::Sample,
        }
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// p x n training matrix (columns are samples), or a p x p sample
    /// covariance when --n is given.
    #[arg(long)]
    input: PathBuf,
    /// Number of training samples behind a covariance input.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Write the shrunken covariance here (`.bin` for binary).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Steering vector (p x 1 or 1 x p).
    #[arg(long)]
    mu: PathBuf,
    /// Observation (p x 1 or 1 x p).
    #[arg(long)]
    y: PathBuf,
    /// p x n training matrix.
    #[arg(long, conflicts_with = "covariance", required_unless_present = "covariance")]
    training: Option<PathBuf>,
    /// p x p sample covariance; needs --n.
    #[arg(long, requires = "n")]
    covariance: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "amfshrink: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Estimate(args) => estimate(args, stdout),
        Command::Detect(args) => detect(args, stdout),
        Command::Roc(args) => {
            let (cfg, opts) = load(&args)?;
            let result = run_roc(&cfg, args.seed, opts)?;
            report_time(stderr, result.wall_time);
            emit(&args.output, stdout, |w| result.write_points_csv(w, "roc"))
        }
        Command::Experiment(args) => {
            let (cfg, opts) = load(&args)?;
            let result = run_experiment(&cfg, args.seed, opts)?;
            report_time(stderr, result.wall_time);
            emit(&args.output, stdout, |w| result.write_summary_csv(w))
        }
        Command::Compare(args) => {
            let (cfg, opts) = load(&args)?;
            let table = compare_estimators(&cfg, args.seed, opts)?;
            emit(&args.output, stdout, |w| table.write_csv(w))
        }
        Command::Converge(args) => {
            let (cfg, opts) = load(&args)?;
            let table = convergence_study(&cfg, args.seed, opts)?;
            emit(&args.output, stdout, |w| table.write_csv(w))
        }
    }
}

fn report_time(stderr: &mut dyn Write, wall: std::time::Duration) {
    let _ = writeln!(stderr, "wall time: {:.3} s", wall.as_secs_f64());
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, RunOptions)> {
    if args.threads == Some(0) {
        return Err(HarnessError::Usage("--threads must be at least 1".into()));
    }
    let cfg = ExperimentConfig::load(&args.config)?;
    Ok((cfg, RunOptions { threads: args.threads }))
}

fn emit(
    path: &Option<PathBuf>,
    stdout: &mut dyn Write,
    write: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush().map_err(|e| HarnessError::io(path, e))
        }
        None => write(stdout),
    }
}

fn spectrum_from(input: &Path, n: Option<usize>) -> Result<(Field, SampleSpectrum)> {
    let m = read_matrix(input)?;
    let field = m.field;
    let spectrum = match n {
        Some(n) => SampleSpectrum::from_covariance(&HermitianMatrix::new(field, m.data)?, n)?,
        None => SampleSpectrum::from_training(&TrainingSet::from_matrix(m.data, field)?)?,
    };
    Ok((field, spectrum))
}

fn fit(spec: &EstimatorSpec, spectrum: &SampleSpectrum) -> Result<ShrinkageCovariance> {
    Ok(spec.fit(spectrum, None)?)
}

fn estimate(args: EstimateArgs, stdout: &mut dyn Write) -> Result<()> {
    let (field, spectrum) = spectrum_from(&args.input, args.n)?;
    let est = fit(&args.estimator.spec(), &spectrum)?;
    let out = |e: std::io::Error| HarnessError::io(Path::new("<stdout>"), e);
    writeln!(stdout, "index,eigenvalue,raw,shrunken").map_err(out)?;
    let raw = est.diagnostics().map(|d| d.raw.as_slice());
    for (j, (&lambda, &delta)) in spectrum.eigenvalues().iter().zip(est.shrunken()).enumerate() {
        let r = raw.map(|r| r[j].to_string()).unwrap_or_default();
        writeln!(stdout, "{j},{lambda},{r},{delta}").map_err(out)?;
    }
    if let Some(path) = &args.output {
        let m = MatrixData::new(field, est.to_matrix().into_matrix());
        write_matrix(&m, path, MatrixFormat::from_path(path))?;
    }
    Ok(())
}

fn read_vector(path: &Path, field: Field, p: usize) -> Result<CVector> {
    let m = read_matrix(path)?;
    if m.field == Field::Complex && field == Field::Real {
        return Err(HarnessError::Config(format!(
            "{}: complex vector for real-field data",
            path.display()
        )));
    }
    if m.rows().min(m.cols()) != 1 || m.rows().max(m.cols()) != p {
        return Err(HarnessError::Config(format!(
            "{}: expected a vector of length {p}, got {}x{}",
            path.display(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(CVector::from_iterator(p, m.data.iter().copied()))
}

fn detect(args: DetectArgs, stdout: &mut dyn Write) -> Result<()> {
    let (input, n) = match (&args.training, &args.covariance) {
        (Some(t), None) => (t, None),
        (None, Some(c)) => (c, args.n),
        _ => {
            return Err(HarnessError::Usage(
                "give exactly one of --training or --covariance".into(),
            ))
        }
    };
    let (field, spectrum) = spectrum_from(input, n)?;
    let est = fit(&args.estimator.spec(), &spectrum)?;
    let mu = read_vector(&args.mu, field, spectrum.dim())?;
    let y = read_vector(&args.y, field, spectrum.dim())?;
    let stat = amf_statistic(&mu, &est, &y)?;
    let t = threshold_for_alpha(args.alpha, field)?;
    let decision = if stat.t_squared > t { "H1" } else { "H0" };
    let out = |e: std::io::Error| HarnessError::io(Path::new("<stdout>"), e);
    writeln!(stdout, "t_squared={}", stat.t_squared).map_err(out)?;
    writeln!(stdout, "threshold={t}").map_err(out)?;
    writeln!(stdout, "decision={decision}").map_err(out)?;
    Ok(())
}
