use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the kinetics toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameters (lambda={lambda}, m={m}) violate the log-Sobolev condition 1 - lambda/2 >= |m| (strict when m = 0)")]
    Regime { lambda: f64, m: f64 },

    #[error("grid points violate the log-Sobolev condition: {}", format_points(.0))]
    RegimeGrid(Vec<(f64, f64)>),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("grid mismatch: {0} cells vs {1} cells")]
    GridMismatch(usize, usize),

    #[error("grid needs at least 4 cells, got {0}")]
    GridSize(usize),

    #[error("absolute continuity violated at cell {index}: f > 0 where the reference vanishes")]
    AbsoluteContinuity { index: usize },

    #[error("non-positive value {value} at index {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("negative or non-finite density value {value} at index {index}")]
    InvalidDensity { index: usize, value: f64 },

    #[error("function is identically zero")]
    ZeroFunction,

    #[error("ensemble size must be even, got {0}")]
    OddEnsemble(usize),

    #[error("opinion {value} at index {index} lies outside [-1, 1]")]
    OpinionRange { index: usize, value: f64 },

    #[error("tridiagonal solve broke down at row {row}")]
    LinearSolve { row: usize },

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("config validation error on {field}: {msg}")]
    Validation { field: String, msg: String },

    #[error("acceptance check failed: {0}")]
    CheckFailed(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 1 usage/config, 2 numerical, 3 acceptance failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse { .. } | Error::Validation { .. } | Error::Io { .. } => 1,
            Error::InvalidParams { .. } | Error::Regime { .. } | Error::RegimeGrid(_) => 1,
            Error::CheckFailed(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

fn format_points(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(lambda, m)| format!("(lambda={lambda}, m={m})"))
        .collect::<Vec<_>>()
        .join(", ")
}
