//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(PathBuf),

    #[error("corrupt data in {path}: {detail}")]
    CorruptData { path: PathBuf, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("tile {tile_w}x{tile_h} larger than image {width}x{height}")]
    TileTooLarge {
        tile_w: usize,
        tile_h: usize,
        width: usize,
        height: usize,
    },

    #[error("conduction threshold must be positive, got {0}")]
    NonPositiveKappa(f64),

    #[error("step weight lambda must be in [0, 1], got {0}")]
    InvalidLambda(f64),

    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),

    #[error("kernel {kernel}x{kernel} larger than image {width}x{height}")]
    KernelTooLarge {
        kernel: usize,
        width: usize,
        height: usize,
    },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid filter bank parameters: {0}")]
    InvalidBankParams(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("k_nn = {k} exceeds training set size {n}")]
    KTooLarge { k: usize, n: usize },

    #[error("class {class} has {count} samples, fewer than {folds} folds")]
    TooFewSamplesPerClass {
        class: String,
        count: usize,
        folds: usize,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid synthetic dataset spec: {0}")]
    InvalidSpec(String),

    #[error("manifest {path} line {line}: {detail}")]
    ManifestParse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("{} file(s) failed to load:\n{}", .0.len(), .0.join("\n"))]
    IngestFailures(Vec<String>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
