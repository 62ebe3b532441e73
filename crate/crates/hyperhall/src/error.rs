use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid isometry: determinant {0}")]
    InvalidIsometry(f64),
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
    #[error("point outside model domain: {0}")]
    Domain(String),
    #[error("presentation check failed: {0}")]
    Presentation(String),
    #[error("freeness check failed: {0}")]
    Freeness(String),
    #[error("internal consistency: {0}")]
    Consistency(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("truncation insufficient: {0}")]
    Truncation(String),
    #[error("base point placement: {0}")]
    Placement(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Broad failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorClass {
    Config,
    Numeric,
    Invariant,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Placement(_) => ErrorClass::Config,
            Error::Degenerate(_)
            | Error::Solver(_)
            | Error::Truncation(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorClass::Numeric,
            Error::InvalidIsometry(_)
            | Error::Presentation(_)
            | Error::Freeness(_)
            | Error::Consistency(_) => ErrorClass::Invariant,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
