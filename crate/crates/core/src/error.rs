use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no boundary intersection found from ({x}, {y})")]
    NoIntersection { x: f64, y: f64 },

    #[error("no interior node within 3 cells of ({x}, {y})")]
    NoInteriorNode { x: f64, y: f64 },

    #[error("Krylov solve for z-mode {mode} diverged: relative residual {residual:e} after {iterations} iterations")]
    SolverDiverged {
        mode: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("non-finite state produced at stage {stage}")]
    StatePoisoned { stage: usize },

    #[error("magnetic intensity {b} at ({x}, {y}) is below the lower bound {b0}")]
    FieldBound { x: f64, y: f64, b: f64, b0: f64 },

    #[error("relative variation needs a nonzero baseline")]
    ZeroBaseline,

    #[error("rejection sampling stalled: acceptance rate {rate:e}")]
    RejectionStall { rate: f64 },

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("step {step} (t = {t}): {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
