use std::fmt;
use std::path::PathBuf;

/// Counts reached by a stage before it failed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Progress {
    pub records_in: u64,
    pub records_out: u64,
}

impl fmt::Display for Progress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} records read, {} written", self.records_in, self.records_out)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: bad record: {message}")]
    BadRecord { path: PathBuf, line: u64, message: String },
    #[error("{path}: {message}")]
    BadInput { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage `{stage}` failed after {progress}: {source}")]
    Stage {
        stage: &'static str,
        progress: Progress,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str, progress: Progress) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, progress, source: Box::new(e) },
        }
    }
}
