use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("objective returned {value} for particle {particle} at {position:?}")]
    Evaluation {
        particle: usize,
        value: f64,
        position: Vec<f64>,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix has a zero spectral radius")]
    SingularSpectrum,

    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("{0}")]
    Domain(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
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
