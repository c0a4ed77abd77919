use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate signal: rho^2 * sigma^2 + sigma_eta^2 must be positive")]
    DegenerateSignal,

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("invalid folds: k = {k} with n = {n} (need 2 <= k <= n)")]
    InvalidFolds { n: usize, k: usize },

    #[error("missing tau prediction for slot {slot} (record has {available})")]
    MissingTau { slot: usize, available: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("integrated regression needs at least one Monte Carlo value")]
    InvalidM,

    #[error("variance reduction undefined: naive scores have zero variance")]
    UndefinedVr,

    #[error("invalid estimate for model {index}: {value}")]
    InvalidEstimate { index: usize, value: f64 },

    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

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
