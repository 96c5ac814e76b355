//! Command-line companion to the `mixpredict` library: ingestion of daily
//! market records, the direction-prediction protocol (response construction,
//! threshold subsampling, cross-validation, tau sweeps), report rendering,
//! and a synthetic fixture generator used by the test suite.

pub mod ingest;
pub mod protocol;
pub mod report;
pub mod synth;

use chrono::NaiveDate;

/// Everything a subcommand can fail with, classified for exit codes: file
/// and schema contract violations exit 2, numerical failures exit 3,
/// infeasible requests exit 4.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("row {row}: {emotion} is zero; emotion shares must be strictly positive")]
    ZeroEmotion { row: usize, emotion: String },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("only {kept} records exceed the threshold; at least {needed} are needed")]
    EmptySubsample { kept: usize, needed: usize },
    #[error("{n} records cannot be split into {k} folds of at least 4")]
    TooFewForFolds { n: usize, k: usize },
    #[error(transparent)]
    Model(#[from] mixpredict::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Process exit code for this failure: 2 for contract violations in
    /// inputs, 3 for numerical breakdowns, 4 for requests the data cannot
    /// satisfy, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use mixpredict::Error as M;
        match self {
            CliError::Io(_) => 1,
            CliError::Csv(_)
            | CliError::Schema(_)
            | CliError::Parse { .. }
            | CliError::ZeroEmotion { .. }
            | CliError::DuplicateDate(_)
            | CliError::BadRequest(_) => 2,
            CliError::EmptySubsample { .. } | CliError::TooFewForFolds { .. } => 4,
            CliError::Model(m) => match m {
                M::SeparationDetected { .. }
                | M::SingularHessian
                | M::DegenerateData
                | M::DegenerateResponse(_)
                | M::ZeroVarianceColumn { .. }
                | M::ZeroVariance(_)
                | M::Overflow(_)
                | M::NonFiniteValue(_)
                | M::TooManyFailures { .. } => 3,
                _ => 2,
            },
        }
    }
}
