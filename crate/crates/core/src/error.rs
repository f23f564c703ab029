use std::path::PathBuf;

use thiserror::Error;

use crate::grid::GridShape;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid shape {dims:?}: {reason}")]
    InvalidShape { dims: Vec<usize>, reason: &'static str },

    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: GridShape, right: GridShape },

    #[error("value buffer has {got} entries, shape {shape} needs {expected}")]
    LengthMismatch {
        shape: GridShape,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value at site {site}")]
    NonFinite { site: usize },

    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },

    #[error("label {label} at site {site} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, site: usize, classes: usize },

    #[error("mask has no foreground/background interface")]
    DegenerateMask,

    #[error("no site of the predicted field lies in the bias band [{lo}, {hi}]")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("every validation pair was degenerate ({skipped} skipped)")]
    AllDegenerate { skipped: usize },

    #[error("training diverged at epoch {epoch} (loss {loss}) with learning rate {learning_rate}")]
    Diverged {
        epoch: usize,
        loss: f64,
        learning_rate: f64,
    },

    #[error("{path}: format error at byte offset {offset}: {reason}")]
    Format { path: PathBuf, offset: u64, reason: String },

    #[error("{path}: line {line}: {reason}")]
    Config { path: PathBuf, line: usize, reason: String },

    #[error("validation size {requested} exceeds fixture pool of {pool}")]
    PoolTooSmall { requested: usize, pool: usize },

    #[error("trainer failed: {0}")]
    Trainer(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            offset,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input data or files rather than usage.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter { .. } | Error::UnknownPreset(_) | Error::Config { .. }
        )
    }
}
