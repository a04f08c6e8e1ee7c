use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(String),

    #[error("system is unstable (spectral abscissa {0:.3e}); H-infinity norm is infinite")]
    Unstable(f64),

    #[error("H-infinity synthesis infeasible: gamma = {gamma:.6e} fails ({reason})")]
    Infeasible { gamma: f64, reason: String },

    #[error("rank condition violated: {0}")]
    RankCondition(String),

    #[error("ill-posed feedback interconnection (I - D22*DK singular)")]
    IllPosed,

    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("simulation diverged at step {step} (t = {t:.4} s)")]
    Diverged { step: usize, t: f64 },

    #[error("{0} is out of range")]
    OutOfRange(String),

    #[error("non-finite result: {0}")]
    NonFinite(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
