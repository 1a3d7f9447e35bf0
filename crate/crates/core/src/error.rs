use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("numerical conditioning failure: {0}")]
    Conditioning(String),

    #[error("degenerate compatible set: {0}")]
    DegenerateSet(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("every candidate location has already been probed")]
    ExplorationExhausted,

    #[error("probe target ({x:.3}, {y:.3}) does not intersect the phantom surface")]
    OutOfWorkspace { x: f64, y: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
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

    /// Process exit status used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::InvalidInput(_) => 2,
            Error::DegenerateGeometry(_)
            | Error::Conditioning(_)
            | Error::DegenerateSet(_)
            | Error::InsufficientData(_)
            | Error::ExplorationExhausted
            | Error::OutOfWorkspace { .. } => 3,
            Error::Io { .. } => 4,
        }
    }
}
