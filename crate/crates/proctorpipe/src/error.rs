use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] proctorpipe_core::Error),

    #[error("model file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("malformed model graph {}: {reason}", path.display())]
    MalformedGraph { path: PathBuf, reason: String },
    #[error("graph does not declare a static shape for {0:?}")]
    ShapeUnavailable(String),
    #[error("tensor {name:?}: expected shape {expected}, got {actual:?}")]
    ShapeMismatch { name: String, expected: String, actual: Vec<usize> },
    #[error("model execution failed: {0}")]
    RuntimeFailure(String),
    #[error("frame {frame_id}: person {index} failed: {source}")]
    RoiFailure {
        frame_id: String,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {source}", path.display())]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("manifest has no entries")]
    EmptyManifest,
    #[error("unreadable source {}: {reason}", path.display())]
    UnreadableSource { path: PathBuf, reason: String },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit status for this error: 1 usage, 2 data, 3 model/runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::FileNotFound(_)
            | Error::MalformedGraph { .. }
            | Error::ShapeUnavailable(_)
            | Error::ShapeMismatch { .. }
            | Error::RuntimeFailure(_) => 3,
            Error::RoiFailure { source, .. } => source.exit_code(),
            Error::Core(proctorpipe_core::Error::ShapeMismatch { .. }) => 3,
            Error::Core(proctorpipe_core::Error::InvalidConfig(_)) => 1,
            _ => 2,
        }
    }
}
