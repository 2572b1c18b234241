use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // data_io
    #[error("{path}: parse error at line {line}, column `{column}`: {message}")]
    Parse { path: PathBuf, line: u64, column: String, message: String },
    #[error("{path}: line {line}: treatment value `{value}` is not 0 or 1")]
    InvalidTreatmentValue { path: PathBuf, line: u64, value: String },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("non-finite value at {location}")]
    NonFiniteValue { location: String },
    #[error("covariate column `{column}` is constant and cannot be standardized")]
    DegenerateColumn { column: String },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("no record matches any event")]
    NoEligibleRecords,
    #[error("event matching left the {group} group empty")]
    EmptyGroup { group: &'static str },
    #[error("I/O error on {path}: {message}")]
    Io { path: PathBuf, message: String },

    // core_regression / estimators
    #[error("every sample is treated or none is; the treatment effect is not identified")]
    AllTreatedOrNoneTreated,
    #[error("design needs {columns} columns but only {rows} samples are available")]
    DimensionOverflow { rows: usize, columns: usize },
    #[error("design matrix is rank deficient (collinear columns: {columns:?})")]
    RankDeficient { columns: Vec<String> },
    #[error("outcome vector has {got} entries, design has {expected} rows")]
    OutcomeLength { expected: usize, got: usize },

    // variance_theory
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("covariate variance is {0}, expected 1 (standardize first)")]
    NotStandardized(f64),
    #[error("probability {0} is outside (0, 1)")]
    POutOfRange(f64),
    #[error("denominator mean is zero")]
    ZeroDenominatorMean,
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("grid `{0}` must be non-empty and strictly increasing")]
    InvalidGrid(&'static str),

    // synthetic_models
    #[error("unknown model family `{0}`")]
    UnknownFamily(String),
    #[error("coefficient `{name}` has {got} entries, expected {expected}")]
    DimensionMismatch { name: &'static str, expected: usize, got: usize },
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    // monte_carlo
    #[error("{estimator} failed in every replication at n = {n}")]
    AllReplicationsFailed { estimator: String, n: usize },
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("no closed-form variance for this model: {0}")]
    RegimeMismatch(String),

    // significance
    #[error("domain error: {0}")]
    DomainError(&'static str),
}

impl Error {
    /// Errors caused by bad input data rather than a bad request.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InvalidTreatmentValue { .. }
                | Error::MissingColumn { .. }
                | Error::NonFiniteValue { .. }
                | Error::DegenerateColumn { .. }
                | Error::InvalidDataset(_)
                | Error::NoEligibleRecords
                | Error::EmptyGroup { .. }
                | Error::Io { .. }
                | Error::AllTreatedOrNoneTreated
                | Error::DimensionOverflow { .. }
                | Error::RankDeficient { .. }
                | Error::OutcomeLength { .. }
                | Error::AllReplicationsFailed { .. }
        )
    }
}
