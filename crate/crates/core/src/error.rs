use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("autoregressive polynomial is not stable: {0}")]
    Stability(String),

    #[error("coefficient convention violated: {0}")]
    Convention(String),

    #[error("delay equation has no stationary solution: {0}")]
    NonStationary(String),

    #[error("incompatible grid: {0}")]
    Grid(String),

    #[error("series does not converge: {0}")]
    Convergence(String),

    #[error("kernel L2 mass outside the truncation window is {mass:.3e} of the total, budget {budget:.3e}")]
    Truncation { mass: f64, budget: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("coefficient sequence b is not even")]
    NotEven,

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("replicate {index}: {source}")]
    Replicate {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn grid(msg: impl Into<String>) -> Self {
        Error::Grid(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Stability(_) => "stability",
            Error::Convention(_) => "convention",
            Error::NonStationary(_) => "non_stationary",
            Error::Grid(_) => "grid",
            Error::Convergence(_) => "convergence",
            Error::Truncation { .. } => "truncation",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::NotEven => "not_even",
            Error::Config { .. } => "config",
            Error::Replicate { source, .. } => source.kind(),
            Error::Csv(_) => "csv",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
