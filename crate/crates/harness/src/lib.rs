//! Study runner for the approximate Taylor integrators: convergence sweeps,
//! order fitting, method comparisons, cost tables and CSV files.

pub mod csv_io;
pub mod fit;
pub mod study;


use std::path::PathBuf;

use approx_taylor::problems::ProblemError;
use approx_taylor::IntegrateError;
use thiserror::Error;

pub use csv_io::{emit_csv, read_coefficients, read_report_csv, write_coefficients, CsvReport};
pub use fit::{fit_slope, SlopeFit};
pub use study::{
    build_problem, compare_methods, make_stepper, run_study, Comparison, ConvergenceReport, Method,
    ReferenceKind, Row, RowStatus, StudySpec,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("invalid study: {0}")]
    InvalidSpec(String),
    #[error("method `{method}` cannot run problem `{problem}`: {reason}")]
    Unsupported {
        method: String,
        problem: String,
        reason: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}, line {line}: {message}")]
    Format {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

impl HarnessError {
    /// Whether the failure stems from a diverging integration.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            HarnessError::Integrate(IntegrateError::Divergence { .. })
                | HarnessError::Problem(ProblemError::Integrate(IntegrateError::Divergence { .. }))
        )
    }
}
