use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density {0} outside [0, 1]")]
    DensityOutOfRange(f64),

    #[error("integration diverged at t = {t}: {reason}")]
    IntegrationDiverged { t: f64, reason: String },

    #[error("component f_{index} = {value:e} at t = {t} is below the positivity floor")]
    PositivityViolation { index: usize, value: f64, t: f64 },

    #[error("initial data have different densities ({left} vs {right})")]
    DensityMismatch { left: f64, right: f64 },

    #[error("negative discriminant {delta:e} for class {j}: inconsistent prefix")]
    NegativeDiscriminant { j: usize, delta: f64 },

    #[error("unsupported request: {0}")]
    Capability(String),

    #[error("malformed diagram: {0}")]
    MalformedDiagram(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
