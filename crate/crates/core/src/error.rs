use alloc::string::String;

use crate::timeseries::YearMonth;

/// Errors raised by the estimation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("missing period {missing} in date sequence")]
    Gap { missing: YearMonth },

    #[error("duplicate date {0}")]
    Duplicate(YearMonth),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: String, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("bandwidth {bandwidth} must be smaller than the effective sample {sample}")]
    Bandwidth { bandwidth: usize, sample: usize },

    #[error("I - sum(A) is singular or ill-conditioned (condition number {condition:e})")]
    UnitRootBoundary { condition: f64 },

    #[error("date {0} is outside the model range")]
    Range(YearMonth),

    #[error("{failed} of {replications} bootstrap replications failed")]
    Quality { failed: usize, replications: usize },

    #[error("invalid data-generating process: {0}")]
    Spec(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;
