//! Writes a simulated scenario in the formats the readers accept.

use std::path::{Path, PathBuf};

use crate::detection::EntityImage;
use crate::io::manifest::{write_manifest, ManifestRow};
use crate::io::mot::{write_detections, write_tracks};
use crate::io::netpbm::{write_pbm, write_pgm};
use crate::io::{write_file, IoError};
use crate::simulator::Scenario;

pub const GT_FILE: &str = "gt.csv";
pub const DETECTIONS_FILE: &str = "det.csv";
pub const MANIFEST_FILE: &str = "masks.csv";
pub const MASK_DIR: &str = "masks";

/// Creates `dir` if needed and writes `gt.csv`, `det.csv`, `masks.csv` and
/// one raster per detection under `masks/`.
pub fn write_scenario(dir: &Path, scenario: &Scenario) -> Result<(), IoError> {
    let mask_dir = dir.join(MASK_DIR);
    std::fs::create_dir_all(&mask_dir).map_err(|e| IoError::io(&mask_dir, e))?;
    write_tracks(&dir.join(GT_FILE), &scenario.gt)?;
    write_detections(&dir.join(DETECTIONS_FILE), &scenario.detections)?;

    let mut rows = Vec::with_capacity(scenario.masks.len());
    for (key, image) in scenario.masks.iter() {
        let (name, bytes) = match image {
            EntityImage::Mask(m) => (format!("f{:06}_d{:04}.pbm", key.frame, key.det_index), write_pbm(m)),
            EntityImage::Crop(c) => (format!("f{:06}_d{:04}.pgm", key.frame, key.det_index), write_pgm(c)),
        };
        write_file(&mask_dir.join(&name), bytes)?;
        rows.push(ManifestRow {
            frame: key.frame,
            det_index: key.det_index,
            path: PathBuf::from(MASK_DIR).join(name),
        });
    }
    write_manifest(&dir.join(MANIFEST_FILE), &rows)
}
