use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One violated invariant, reported against a dotted field path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Validation(FieldError),

    #[error("duplicate policy record for {0}")]
    DuplicateRecord(String),

    #[error("empty range for {0}")]
    EmptyRange(&'static str),

    #[error("platform cannot hover: thrust {thrust_n} N vs weight {weight_n:.4} N")]
    CannotHover { thrust_n: f64, weight_n: f64 },

    #[error("oracle instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("point {index} does not dominate the reference point")]
    NotDominatingReference { index: usize },

    #[error("exact hypervolume supports at most 3 objectives, got {0}")]
    UnsupportedDimension(usize),

    #[error("need at least {needed} training points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("search space is empty")]
    EmptySpace,

    #[error("search space has {size} points, above the cap of {cap}")]
    SpaceTooLarge { size: u128, cap: u128 },

    #[error("budget {budget} is below the {init} initial samples")]
    BudgetTooSmall { budget: usize, init: usize },

    #[error("archive is empty")]
    EmptyArchive,

    #[error("design is not over-provisioned: {throughput:.3} FPS vs knee {knee:.3} FPS")]
    NotOverProvisioned { throughput: f64, knee: f64 },

    #[error("malformed archive line {line}: {message}")]
    Archive { line: usize, message: String },

    #[error("unsupported archive schema version {0}")]
    SchemaVersion(u32),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation(FieldError::new(field, message))
    }

    /// True for errors that stem from the configuration rather than the models.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation(_)
                | Error::DuplicateRecord(_)
                | Error::EmptyRange(_)
                | Error::BudgetTooSmall { .. }
        )
    }
}
