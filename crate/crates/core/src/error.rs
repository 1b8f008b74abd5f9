use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the benchmark library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("CSR length mismatch: indptr[last] = {indptr_last}, len(indices) = {indices_len}")]
    CsrLengthMismatch { indptr_last: usize, indices_len: usize },

    #[error("non-canonical CSR: {0}")]
    NonCanonicalCsr(String),

    #[error("label {label} of node {node} is out of range for {num_classes} classes")]
    LabelOutOfRange {
        node: usize,
        label: u32,
        num_classes: usize,
    },

    #[error("class {0} has no nodes")]
    EmptyClass(usize),

    #[error("empty graph")]
    EmptyGraph,

    #[error("all classes removed by min_count = {0}")]
    AllClassesRemoved(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class {class} has {count} nodes, need at least {required} for the split")]
    ClassTooSmall {
        class: usize,
        count: usize,
        required: usize,
    },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("empty mask")]
    EmptyMask,

    #[error("model diverged (non-finite values)")]
    Diverged,

    #[error("empty feasible grid")]
    EmptyGrid,

    #[error("missing result cells: {0}")]
    MissingCells(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.into())
        } else {
            Error::Io {
                path: path.into(),
                source,
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
