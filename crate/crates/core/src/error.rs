use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid bounding box ({x1}, {y1}, {x2}, {y2}): area must be strictly positive and finite")]
    InvalidBox { x1: f32, y1: f32, x2: f32, y2: f32 },
    #[error("image {width}x{height} has {len} samples, expected width * height * 3")]
    ImageDims { width: u32, height: u32, len: usize },
    #[error("tensor shape {shape:?} does not match {len} values")]
    TensorLen { shape: Vec<usize>, len: usize },
    #[error("shape mismatch: expected {expected}, got {actual:?}")]
    ShapeMismatch { expected: String, actual: Vec<usize> },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("box lies entirely outside the image")]
    EmptyAfterClamp,
    #[error("evaluation needs at least one sample")]
    EmptyEvaluation,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no samples to summarize")]
    EmptySamples,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid seat map: {0}")]
    SeatMap(String),
}
