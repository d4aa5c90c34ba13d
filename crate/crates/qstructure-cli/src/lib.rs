//! Front end for `qstructure`: input loading, the analysis pipeline, the
//! verification suite and example generation.
//!
//! The binary in `main.rs` is a thin argument parser over this library.

pub mod examples;
pub mod report;
pub mod text;

use std::path::Path;

use qstructure::Error;
use qstructure::format::{self, Input};
use qstructure::numerics::Tolerances;

pub use report::{AnalysisReport, Check, Suite, analyze};

/// Version of the report layout described in `docs/report.schema.json`.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub tol: Tolerances,
    pub seed: u64,
    /// Largest power `m` in the table of `dim F(Φᵐ)`.
    pub max_power: usize,
    /// Step cap of the ergodic averages that cross-check `E_F`.
    pub cesaro_steps: usize,
    /// Horizon of the finite-time decoherence rate.
    pub gap_horizon: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { tol: Tolerances::default(), seed: 0, max_power: 12, cesaro_steps: 10_000, gap_horizon: 32 }
    }
}

/// Why a command could not produce a report.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input (exit code 2).
    Input(String),
    /// The pipeline raised an error (exit code 3).
    Numerical(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(msg) => write!(f, "input error: {msg}"),
            Failure::Numerical(e) => write!(f, "{} error: {e}", e.module()),
        }
    }
}

impl std::error::Error for Failure {}

/// Wraps a parse-stage error with its module.
pub fn input_failure(e: &Error) -> Failure {
    Failure::Input(format!("{}: {e}", e.module()))
}

pub fn load_text(text: &str, tol: &Tolerances) -> Result<Input, Failure> {
    format::parse_input(text, tol).map_err(|e| input_failure(&e))
}

pub fn load(path: &Path, tol: &Tolerances) -> Result<Input, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    load_text(&text, tol)
}

/// Exit code of a finished report: 0 when every check passed, 1 otherwise.
pub fn report_exit_code(report: &AnalysisReport) -> i32 {
    if report.all_pass() { 0 } else { 1 }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}
