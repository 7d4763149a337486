//! Command-line front end for the structured-singular-value sweep.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use musweep::cli::{self, Mode, PartialConfig};
use musweep::engine::ExecutionMode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Conventional,
    Parallel,
    Compare,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Conventional => Mode::Conventional,
            ModeArg::Parallel => Mode::Parallel,
            ModeArg::Compare => Mode::Compare,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExecutionArg {
    Sequential,
    RoundConcurrent,
}

impl From<ExecutionArg> for ExecutionMode {
    fn from(e: ExecutionArg) -> Self {
        match e {
            ExecutionArg::Sequential => ExecutionMode::Sequential,
            ExecutionArg::RoundConcurrent => ExecutionMode::RoundConcurrent,
        }
    }
}

/// Maximal structured singular value of an LTI system over a frequency
/// range, for real diagonal uncertainty.
///
/// Exit codes: 0 converged, 2 not converged, 3 input error.
#[derive(Parser, Debug)]
#[command(name = "musweep", version)]
struct Args {
    /// JSON sweep configuration; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Model file (JSON with row-major "A", "B", "C" and optional "D").
    #[arg(long)]
    model: Option<PathBuf>,

    /// Algorithm to run.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    /// Lower end of the frequency range, rad/s.
    #[arg(long)]
    a: Option<f64>,

    /// Upper end of the frequency range, rad/s.
    #[arg(long)]
    b: Option<f64>,

    /// Number of interleaved sweep branches.
    #[arg(long = "N")]
    n: Option<usize>,

    /// Frequencies per branch (grid has N*K points).
    #[arg(long = "K")]
    k: Option<usize>,

    /// Relative tolerance of the shared-incumbent sweep.
    #[arg(long)]
    eps_rel: Option<f64>,

    /// Absolute gap target of the conventional sweep.
    #[arg(long)]
    eps_abs: Option<f64>,

    /// Round budget per branch step of the shared-incumbent sweep.
    #[arg(long)]
    it: Option<usize>,

    /// Seed for sampled-corner reproducibility.
    #[arg(long)]
    seed: Option<u64>,

    /// Box budget per frequency of the conventional sweep.
    #[arg(long)]
    max_boxes: Option<usize>,

    /// Round execution strategy; both produce bit-identical results.
    #[arg(long, value_enum)]
    execution: Option<ExecutionArg>,

    /// Output directory for summary.json and bounds.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Args {
    fn as_partial(&self) -> PartialConfig {
        PartialConfig {
            model: self.model.clone(),
            mode: self.mode.map(Mode::from),
            a: self.a,
            b: self.b,
            n: self.n,
            k: self.k,
            eps_rel: self.eps_rel,
            eps_abs: self.eps_abs,
            it: self.it,
            seed: self.seed,
            max_boxes: self.max_boxes,
            execution: self.execution.map(ExecutionMode::from),
            out: self.out.clone(),
        }
    }
}

fn run() -> Result<i32, cli::CliError> {
    let args = Args::parse();
    let base = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| cli::CliError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str::<PartialConfig>(&text).map_err(|e| {
                cli::CliError::Input(format!("cannot parse {}: {e}", path.display()))
            })?
        }
        None => PartialConfig::default(),
    };
    let config = base.overlaid(args.as_partial()).resolve()?;
    let outcome = cli::execute(&config)?;

    let summary = &outcome.summary;
    let headline = summary.result.as_ref().or(summary.parallel.as_ref());
    if let Some(res) = headline {
        eprintln!(
            "mu_hat = {:.6} at omega = {:.6} (i = {}, j = {}), converged = {}",
            res.mu_hat, res.peak_omega, res.peak_index.0, res.peak_index.1, res.converged
        );
    }
    if let Some(ratios) = &summary.ratios {
        eprintln!(
            "parallel/conventional boxes = {:.4}, bound evaluations = {:.4}",
            ratios.boxes_created, ratios.bound_evaluations
        );
    }
    eprintln!(
        "wrote {} and {}",
        outcome.summary_path.display(),
        outcome.csv_path.display()
    );
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
