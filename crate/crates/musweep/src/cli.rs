//! Batch front end: model-file ingestion, sweep configuration and the
//! machine-readable artifacts (summary JSON plus per-frequency bound CSV).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::BoundOptions;
use crate::engine::{self, ExecutionMode, FrequencyGrid, RootBounds, SweepResult};
use crate::error::Error as LibError;
use crate::plant::StateSpaceModel;
use crate::uncertainty::VERTEX_ENUM_LIMIT;

/// Run converged within tolerance.
pub const EXIT_CONVERGED: i32 = 0;
/// Some frequency hit the iteration or box budget.
pub const EXIT_NOT_CONVERGED: i32 = 2;
/// Bad model file, bad configuration, or a grid point on a plant pole.
pub const EXIT_INPUT_ERROR: i32 = 3;

/// Which algorithm the run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Conventional,
    Parallel,
    Compare,
}

/// Fully resolved sweep configuration, echoed verbatim into the summary so
/// a run can be reproduced from its own output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: PathBuf,
    pub mode: Mode,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub eps_rel: f64,
    pub eps_abs: f64,
    pub it: usize,
    pub seed: u64,
    pub max_boxes: usize,
    pub execution: ExecutionMode,
    pub out: PathBuf,
}

pub const DEFAULT_EPS_REL: f64 = 0.01;
pub const DEFAULT_EPS_ABS: f64 = 0.005;
pub const DEFAULT_IT: usize = 100;
pub const DEFAULT_MAX_BOXES: usize = 1_000_000;

/// Configuration as read from a JSON file or assembled from flags; every
/// field optional so flags can override file values before defaults fill
/// the rest.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub model: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub eps_rel: Option<f64>,
    pub eps_abs: Option<f64>,
    pub it: Option<usize>,
    pub seed: Option<u64>,
    pub max_boxes: Option<usize>,
    pub execution: Option<ExecutionMode>,
    pub out: Option<PathBuf>,
}

impl PartialConfig {
    /// Overlay: any field set in `over` wins.
    pub fn overlaid(mut self, over: PartialConfig) -> PartialConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if over.$field.is_some() { self.$field = over.$field; })*
            };
        }
        take!(model, mode, a, b, n, k, eps_rel, eps_abs, it, seed, max_boxes, execution, out);
        self
    }

    /// Fills defaults and rejects missing required fields.
    pub fn resolve(self) -> Result<SweepConfig, CliError> {
        let require = |name: &str| CliError::Input(format!("missing required setting: {name}"));
        Ok(SweepConfig {
            model: self.model.ok_or_else(|| require("model"))?,
            mode: self.mode.ok_or_else(|| require("mode"))?,
            a: self.a.ok_or_else(|| require("a"))?,
            b: self.b.ok_or_else(|| require("b"))?,
            n: self.n.ok_or_else(|| require("N"))?,
            k: self.k.ok_or_else(|| require("K"))?,
            eps_rel: self.eps_rel.unwrap_or(DEFAULT_EPS_REL),
            eps_abs: self.eps_abs.unwrap_or(DEFAULT_EPS_ABS),
            it: self.it.unwrap_or(DEFAULT_IT),
            seed: self.seed.unwrap_or(0),
            max_boxes: self.max_boxes.unwrap_or(DEFAULT_MAX_BOXES),
            execution: self.execution.unwrap_or_default(),
            out: self.out.unwrap_or_else(|| PathBuf::from("musweep_out")),
        })
    }
}

/// Errors surfaced to the command line, mapped to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT_ERROR,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// On-disk model format: row-major arrays of numbers for A, B, C and
/// optionally D, plus an optional uncertainty descriptor (only
/// `real_diagonal` is supported).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Option<Vec<Vec<f64>>>,
    uncertainty: Option<UncertaintyField>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UncertaintyField {
    #[serde(rename = "type")]
    kind: String,
}

fn flatten(name: &str, rows: &[Vec<f64>]) -> Result<(usize, usize, Vec<f64>), CliError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CliError::Input(format!("matrix {name} must be non-empty")));
    }
    let cols = rows[0].len();
    let mut flat = Vec::with_capacity(rows.len() * cols);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::Input(format!(
                "matrix {name} row {r} has {} entries, expected {cols}",
                row.len()
            )));
        }
        for (c, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "matrix {name} has a non-finite entry at ({r}, {c})"
                )));
            }
            flat.push(v);
        }
    }
    Ok((rows.len(), cols, flat))
}

/// Loads and validates a model file; the uncertainty dimension is the
/// column count of B and the uncertainty set defaults to the real diagonal
/// unit box.
pub fn load_model(path: &Path) -> Result<StateSpaceModel, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("cannot parse {}: {e}", path.display())))?;
    if let Some(u) = &file.uncertainty {
        if u.kind != "real_diagonal" {
            return Err(CliError::Input(format!(
                "unsupported uncertainty type {:?}; only \"real_diagonal\" is supported",
                u.kind
            )));
        }
    }
    let (a_rows, a_cols, a) = flatten("A", &file.a)?;
    if a_rows != a_cols {
        return Err(CliError::Input(format!(
            "matrix A must be square, got {a_rows}x{a_cols}"
        )));
    }
    let (b_rows, n, b) = flatten("B", &file.b)?;
    if b_rows != a_rows {
        return Err(CliError::Input(format!(
            "matrix B has {b_rows} rows but A is {a_rows}x{a_rows}"
        )));
    }
    let (c_rows, c_cols, c) = flatten("C", &file.c)?;
    if c_cols != a_rows {
        return Err(CliError::Input(format!(
            "matrix C has {c_cols} columns but A is {a_rows}x{a_rows}"
        )));
    }
    if c_rows != n {
        return Err(CliError::Input(format!(
            "matrix C has {c_rows} rows but B has {n} columns; M Delta must be square"
        )));
    }
    let d = match &file.d {
        Some(rows) => {
            let (d_rows, d_cols, d) = flatten("D", rows)?;
            if d_rows != n || d_cols != n {
                return Err(CliError::Input(format!(
                    "matrix D must be {n}x{n}, got {d_rows}x{d_cols}"
                )));
            }
            Some(d)
        }
        None => None,
    };
    StateSpaceModel::new(a_rows, n, &a, &b, &c, d.as_deref()).map_err(CliError::from)
}

/// Bound-implementation details echoed into every summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundMetadata {
    pub tau_imag: f64,
    pub vertex_enum_limit: usize,
    pub corner_samples: usize,
    pub edge_scan_points: usize,
    pub ub_bases: Vec<String>,
}

impl BoundMetadata {
    fn from_options(opts: &BoundOptions) -> Self {
        Self {
            tau_imag: opts.tau_imag,
            vertex_enum_limit: VERTEX_ENUM_LIMIT,
            corner_samples: opts.corner_samples,
            edge_scan_points: opts.edge_scan_points,
            ub_bases: vec![
                "perturbation".into(),
                "coarse-norm".into(),
                "det-exclusion".into(),
            ],
        }
    }
}

/// Efficiency ratios reported in compare mode (parallel over conventional).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub boxes_created: f64,
    pub bound_evaluations: f64,
}

/// The summary artifact written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub config: SweepConfig,
    pub bound_metadata: BoundMetadata,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<SweepResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallel: Option<SweepResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conventional: Option<SweepResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Ratios>,
}

/// Everything a finished run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Summary,
    pub summary_path: PathBuf,
    pub csv_path: PathBuf,
}

/// Executes the configured run and writes `summary.json` and `bounds.csv`
/// into the output directory.
pub fn execute(config: &SweepConfig) -> Result<RunOutcome, CliError> {
    let model = load_model(&config.model)?;
    let grid = FrequencyGrid::new(config.a, config.b, config.n, config.k)?;
    let opts = BoundOptions {
        seed: config.seed,
        ..BoundOptions::default()
    };

    let root_bounds = engine::root_bounds_sweep(&model, &grid, &opts)?;

    let mut summary = Summary {
        mode: config.mode,
        config: config.clone(),
        bound_metadata: BoundMetadata::from_options(&opts),
        result: None,
        parallel: None,
        conventional: None,
        ratios: None,
    };
    let exit_code = match config.mode {
        Mode::Parallel => {
            let res = engine::run_parallel(
                &model,
                &grid,
                config.eps_rel,
                config.it,
                config.execution,
                &opts,
            )?;
            let code = if res.converged {
                EXIT_CONVERGED
            } else {
                EXIT_NOT_CONVERGED
            };
            summary.result = Some(res);
            code
        }
        Mode::Conventional => {
            let run =
                engine::run_conventional(&model, &grid, config.eps_abs, config.max_boxes, &opts)?;
            let code = if run.result.converged {
                EXIT_CONVERGED
            } else {
                EXIT_NOT_CONVERGED
            };
            summary.result = Some(run.result);
            code
        }
        Mode::Compare => {
            let report = engine::compare(
                &model,
                &grid,
                config.eps_rel,
                config.eps_abs,
                config.it,
                config.max_boxes,
                config.execution,
                &opts,
            )?;
            let both = report.parallel.converged && report.conventional.result.converged;
            summary.ratios = Some(Ratios {
                boxes_created: report.box_ratio,
                bound_evaluations: report.bound_eval_ratio,
            });
            summary.parallel = Some(report.parallel);
            summary.conventional = Some(report.conventional.result);
            if both {
                EXIT_CONVERGED
            } else {
                EXIT_NOT_CONVERGED
            }
        }
    };

    fs::create_dir_all(&config.out).map_err(|source| CliError::Io {
        path: config.out.clone(),
        source,
    })?;
    let summary_path = config.out.join("summary.json");
    let json =
        serde_json::to_string_pretty(&summary).expect("summary serialization cannot fail") + "\n";
    fs::write(&summary_path, json).map_err(|source| CliError::Io {
        path: summary_path.clone(),
        source,
    })?;

    let csv_path = config.out.join("bounds.csv");
    fs::write(&csv_path, render_bounds_csv(&root_bounds)).map_err(|source| CliError::Io {
        path: csv_path.clone(),
        source,
    })?;

    Ok(RunOutcome {
        exit_code,
        summary,
        summary_path,
        csv_path,
    })
}

/// Upper/lower bounds of the full uncertainty box per grid frequency.
/// Floats print in shortest-roundtrip form, so parsing a value back yields
/// the identical binary64.
fn render_bounds_csv(rows: &[RootBounds]) -> String {
    let mut out = String::from("omega,ub_bbdelta,lb_bbdelta\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.omega, row.ub, row.lb));
    }
    out
}
