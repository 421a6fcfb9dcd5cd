use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("triangle {index} is not counterclockwise (signed area {area:e})")]
    Orientation { index: usize, area: f64 },

    #[error("mesh topology: {0}")]
    Topology(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("reference point ({xi}, {eta}) lies outside the reference triangle")]
    Domain { xi: f64, eta: f64 },

    #[error("non-finite {what} in element {element}")]
    NumericalInput { element: usize, what: String },

    #[error("negative dissipation source {0:e}")]
    NegativeSource(f64),

    #[error("linear solver: {message} (relative residual {residual:e})")]
    Solver { message: String, residual: f64 },

    #[error("undefined scale: {0}")]
    UndefinedScale(String),

    #[error("non-finite statistic `{name}` at t = {t}")]
    NonFinite { name: &'static str, t: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
