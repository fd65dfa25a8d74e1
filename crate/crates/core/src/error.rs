use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its invariant. `field` is the dotted
    /// path of the offending setting, e.g. `world.counts.adults`.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// A dataset directory is missing a table or a table is malformed.
    #[error("input error: {0}")]
    Input(String),

    #[error("story template error: {0}")]
    Template(String),

    #[error("date {0} is outside the simulated range")]
    DateOutOfRange(chrono::NaiveDate),

    /// An internal invariant was broken. Always a bug.
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
