use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "device {device} is infeasible: energy budget {budget} J does not exceed map energy {map_energy} J"
    )]
    Infeasible {
        device: usize,
        budget: f64,
        map_energy: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("instance too large for enumeration: K*Q = {0} exceeds 16")]
    TooLarge(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
