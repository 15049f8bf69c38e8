use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used to pick the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Solver,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Solver => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::Config => "config",
            ErrorClass::Data => "data",
            ErrorClass::Solver => "solver",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    // -- model / solver --
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("medium bleached: intensity reaches zero at z = {zero_at:.6e} cm, before z = {z:.6e} cm")]
    Bleached { z: f64, zero_at: f64 },
    #[error("zero coherence decay with transmission {transmission} < 1")]
    ZeroDecay { transmission: f64 },
    #[error("inconsistent observable point: {0}")]
    InconsistentPoint(String),
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("root not bracketed on [{lo:.6e}, {hi:.6e}]: residuals {f_lo:.3e} and {f_hi:.3e}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("singular steady-state system (condition estimate {condition:.3e}): {reason}")]
    Singular { condition: f64, reason: String },
    #[error("z step too coarse: relative intensity change {change:.3} at z = {z:.4e} cm exceeds {limit}")]
    StepSize { z: f64, change: f64, limit: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative rate {name} = {value}")]
    NegativeRate { name: &'static str, value: f64 },

    // -- configuration --
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: unit `{unit}` not accepted for `{key}` (expected one of: {expected})")]
    UnitMismatch { line: usize, key: String, unit: String, expected: String },
    #[error("run mode required (set `run.mode` or pass it on the command line)")]
    MissingMode,
    #[error("config: {0}")]
    Config(String),

    // -- data --
    #[error("{path}: line {line}: {msg}")]
    Data { path: String, line: usize, msg: String },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Parse { .. } | UnknownKey { .. } | UnitMismatch { .. } | MissingMode | Config(_) => {
                ErrorClass::Config
            }
            Data { .. } | MissingColumn { .. } | Io { .. } => ErrorClass::Data,
            _ => ErrorClass::Solver,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
