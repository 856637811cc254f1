//! File formats: MOT CSV, mask manifests, netpbm rasters, JSON
//! configuration and SVG trajectory plots.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod config;
pub mod manifest;
pub mod mot;
pub mod netpbm;
pub mod scenario;
pub mod svg;

pub use config::{load_config, parse_config, AppConfig, MetricsConfig};
pub use manifest::{load_masks, read_manifest, write_manifest, ManifestRow};
pub use mot::{
    format_detections, format_tracks, parse_detections, parse_mot_line, parse_tracks,
    read_detections, read_tracks, write_detections, write_tracks, MotRow,
};
pub use netpbm::{read_pbm, read_pgm, write_pbm, write_pgm};
pub use scenario::write_scenario;
pub use svg::render_svg;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        IoError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(path: &Path, message: impl Into<String>) -> Self {
        IoError::Invalid {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(|e| IoError::io(path, e))
}

/// Non-blank lines that are not `#` comments, numbered from 1.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}
