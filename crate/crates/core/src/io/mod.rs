//! File formats: score tables and density samples as CSV, formal contexts
//! in Burmeister CXT, trees and lattices in DOT.

mod cxt;
mod dot;
mod number;
mod tables;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use cxt::{export_cxt, parse_cxt, read_cxt, write_cxt};
pub use dot::{export_dot, lattice_to_dot, tree_to_dot, DotGraph};
pub use number::format_number;
pub use tables::{
    cases_csv, density_samples_csv, export_scores_csv, parse_scores_csv, read_scores_csv, scores_csv,
    supports_csv, DENSITY_SAMPLE_POINTS,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("name {0:?} cannot be written (contains a line break)")]
    InvalidName(String),
}

impl IoError {
    fn format(line: usize, message: impl Into<String>) -> Self {
        Self::Format {
            line,
            message: message.into(),
        }
    }
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<(), IoError> {
    let wrap = |source| IoError::File {
        path: path.to_owned(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    std::fs::write(path, contents).map_err(wrap)
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_owned(),
        source,
    })
}
