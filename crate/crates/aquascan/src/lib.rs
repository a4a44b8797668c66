//! File formats, dataset tooling and commands around `aquascan-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod imageio;
pub mod manifest;
pub mod model;
pub mod report;
pub mod synthetic;
pub mod table;

pub use aquascan_core as core;
pub use error::{AppError, Result};

use std::path::Path;

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}
