use std::io;
use std::path::{Path, PathBuf};

use aquascan_core::augment::{AugmentError, ParseAugmentError};
use aquascan_core::baselines::BaselineError;
use aquascan_core::metrics::MetricsError;
use aquascan_core::pipeline::PipelineError;
use aquascan_core::raster::RasterError;
use aquascan_core::svm::SvmError;
use aquascan_core::Label;

use crate::manifest::Split;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: unsupported image format")]
    UnsupportedFormat { path: PathBuf },
    #[error("{path}: corrupt file: {reason}")]
    CorruptFile { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    IoFailure { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: line {line}: {reason}")]
    BadManifest { path: PathBuf, line: u64, reason: String },
    #[error("missing label directory {path}")]
    MissingLabelDir { path: PathBuf },
    #[error("no {label} images in the {split} split")]
    EmptyClass { label: Label, split: Split },
    #[error("every {split} image was rejected by the pipeline")]
    AllImagesRejected { split: Split },
    #[error("{path}: model format {found} is not supported (expected {expected})")]
    ModelVersionMismatch { path: PathBuf, found: String, expected: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    ParseAugment(#[from] ParseAugmentError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

impl AppError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        AppError::IoFailure { path: path.to_path_buf(), source }
    }

    pub fn corrupt(path: &Path, reason: impl Into<String>) -> Self {
        AppError::CorruptFile { path: path.to_path_buf(), reason: reason.into() }
    }

    /// Process exit status: 1 for usage errors, 2 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;
