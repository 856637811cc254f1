//! Mask manifest: `frame,det_index,path` per line, paths relative to the
//! manifest's directory. An optional `frame,det_index,path` header is
//! skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::detection::{Detection, EntityImage, MaskRef, MaskStore};
use crate::io::netpbm::{read_pbm, read_pgm};
use crate::io::{content_lines, read_text, write_file, IoError};
use crate::trajectory::Frame;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub frame: Frame,
    pub det_index: usize,
    /// As written in the manifest.
    pub path: PathBuf,
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Vec<ManifestRow>, IoError> {
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.splitn(3, ',').map(str::trim).collect();
        if rows.is_empty() && seen.is_empty() && fields.first() == Some(&"frame") {
            continue;
        }
        if fields.len() != 3 || fields[2].is_empty() {
            return Err(IoError::parse(path, line, "expected frame,det_index,path"));
        }
        let frame: Frame = fields[0]
            .parse()
            .ok()
            .filter(|&f| f >= 1)
            .ok_or_else(|| IoError::parse(path, line, format!("invalid frame {:?}", fields[0])))?;
        let det_index: usize = fields[1]
            .parse()
            .map_err(|_| IoError::parse(path, line, format!("invalid det_index {:?}", fields[1])))?;
        if !seen.insert((frame, det_index)) {
            return Err(IoError::parse(
                path,
                line,
                format!("duplicate entry for frame {frame}, detection {det_index}"),
            ));
        }
        rows.push(ManifestRow {
            frame,
            det_index,
            path: PathBuf::from(fields[2]),
        });
    }
    Ok(rows)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>, IoError> {
    parse_manifest(&read_text(path)?, path)
}

/// Loads every image named by the manifest, anchors it at its detection's
/// box and attaches the mask reference to that detection. `P5` files are
/// crops still to be segmented, `P4` files finished masks.
pub fn load_masks(
    manifest: &Path,
    detections: &mut BTreeMap<Frame, Vec<Detection>>,
) -> Result<MaskStore, IoError> {
    let text = read_text(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let mut store = MaskStore::new();
    for row in parse_manifest(&text, manifest)? {
        let det = detections
            .get_mut(&row.frame)
            .and_then(|d| d.get_mut(row.det_index))
            .ok_or_else(|| {
                IoError::invalid(
                    manifest,
                    format!("no detection {} in frame {}", row.det_index, row.frame),
                )
            })?;
        let file = base.join(&row.path);
        let bytes = std::fs::read(&file).map_err(|e| IoError::io(&file, e))?;
        let image = match bytes.get(..2) {
            Some(b"P5") => read_pgm(&bytes).and_then(|r| r.into_crop(det.bbox)).map(EntityImage::Crop),
            Some(b"P4") => read_pbm(&bytes).and_then(|r| r.into_mask(det.bbox)).map(EntityImage::Mask),
            _ => Err("not a binary PGM (P5) or PBM (P4) file".to_string()),
        }
        .map_err(|m| IoError::invalid(&file, m))?;
        let key = MaskRef {
            frame: row.frame,
            det_index: row.det_index,
        };
        det.mask_ref = Some(key);
        store.insert(key, image);
    }
    Ok(store)
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<(), IoError> {
    let mut out = String::from("frame,det_index,path\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.frame, r.det_index, r.path.display());
    }
    write_file(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_comments_are_skipped() {
        let rows = parse_manifest("frame,det_index,path\n# c\n1,0,masks/a.pbm\n", Path::new("m.csv")).unwrap();
        assert_eq!(
            rows,
            vec![ManifestRow {
                frame: 1,
                det_index: 0,
                path: "masks/a.pbm".into()
            }]
        );
    }

    #[test]
    fn duplicates_and_malformed_rows_fail() {
        let p = Path::new("m.csv");
        assert!(matches!(
            parse_manifest("1,0,a.pbm\n1,0,b.pbm\n", p),
            Err(IoError::Parse { line: 2, .. })
        ));
        assert!(parse_manifest("1,a.pbm\n", p).is_err());
        assert!(parse_manifest("0,0,a.pbm\n", p).is_err());
    }
}
