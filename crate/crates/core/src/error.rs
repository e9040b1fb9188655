use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// The adaptive integrator could not meet the tolerance above `dt_min`.
    #[error(
        "step underflow for particle {particle_id} (diameter {diameter:e} m) at t = {time} s: \
         dt {dt:e} s below minimum"
    )]
    Stiffness {
        particle_id: u64,
        diameter: f64,
        time: f64,
        dt: f64,
    },

    #[error("malformed row at {path}:{line}: {message}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("empirical sample in {0} has zero total weight")]
    ZeroWeight(PathBuf),

    #[error("conservation ledger violated: {0}")]
    Ledger(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by bad configuration or input data, as opposed
    /// to failures that happen while a valid scenario is running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Config { .. }
                | Error::MalformedRow { .. }
                | Error::ZeroWeight(_)
                | Error::Json { .. }
        )
    }
}
