//! MOT-challenge CSV: `frame,id,left,top,width,height,conf,x,y,z`.
//!
//! Raw detections carry id -1. In track files a confidence of exactly 0
//! marks an interpolated box. The trailing world coordinates are written as
//! -1 and ignored on read.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::detection::Detection;
use crate::geometry::BBox;
use crate::io::{content_lines, read_text, write_file, IoError};
use crate::trajectory::{Frame, TrackId, TrajectoryPoint, TrajectorySet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotRow {
    pub frame: Frame,
    pub id: i64,
    pub bbox: BBox,
    pub conf: f64,
}

pub fn parse_mot_line(line: &str) -> Result<MotRow, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 10 {
        return Err(format!("expected 10 fields, found {}", fields.len()));
    }
    let frame: Frame = fields[0]
        .parse()
        .map_err(|_| format!("invalid frame {:?}", fields[0]))?;
    if frame < 1 {
        return Err("frame must be at least 1".into());
    }
    let id: i64 = fields[1]
        .parse()
        .map_err(|_| format!("invalid id {:?}", fields[1]))?;
    let mut nums = [0.0f64; 5];
    let names = ["bb_left", "bb_top", "bb_width", "bb_height", "conf"];
    for (i, slot) in nums.iter_mut().enumerate() {
        let raw = fields[2 + i];
        *slot = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| format!("invalid {} {:?}", names[i], raw))?;
    }
    for raw in &fields[7..] {
        raw.parse::<f64>()
            .map_err(|_| format!("invalid coordinate {raw:?}"))?;
    }
    let bbox = BBox::new(nums[0], nums[1], nums[2], nums[3]).map_err(|e| e.to_string())?;
    Ok(MotRow {
        frame,
        id,
        bbox,
        conf: nums[4],
    })
}

fn warn_unsorted(path: &Path, frames: impl Iterator<Item = Frame>) {
    let mut last = 0;
    for f in frames {
        if f < last {
            log::warn!("{}: frames are not in ascending order; re-sorted", path.display());
            return;
        }
        last = f;
    }
}

/// Detections grouped by frame, each frame in file order. `path` only labels
/// diagnostics.
pub fn parse_detections(text: &str, path: &Path) -> Result<BTreeMap<Frame, Vec<Detection>>, IoError> {
    let mut frames: BTreeMap<Frame, Vec<Detection>> = BTreeMap::new();
    let mut order = Vec::new();
    for (line, content) in content_lines(text) {
        let row = parse_mot_line(content).map_err(|m| IoError::parse(path, line, m))?;
        if !(0.0..=1.0).contains(&row.conf) {
            return Err(IoError::parse(path, line, format!("confidence {} outside [0, 1]", row.conf)));
        }
        order.push(row.frame);
        frames
            .entry(row.frame)
            .or_default()
            .push(Detection::new(row.frame, row.bbox, row.conf));
    }
    warn_unsorted(path, order.into_iter());
    Ok(frames)
}

pub fn read_detections(path: &Path) -> Result<BTreeMap<Frame, Vec<Detection>>, IoError> {
    parse_detections(&read_text(path)?, path)
}

/// Trajectories keyed by the non-negative id column.
pub fn parse_tracks(text: &str, path: &Path) -> Result<TrajectorySet, IoError> {
    let mut points: BTreeMap<(TrackId, Frame), TrajectoryPoint> = BTreeMap::new();
    let mut order = Vec::new();
    for (line, content) in content_lines(text) {
        let row = parse_mot_line(content).map_err(|m| IoError::parse(path, line, m))?;
        let id = u32::try_from(row.id)
            .map(TrackId)
            .map_err(|_| IoError::parse(path, line, format!("track id {} is not a non-negative integer", row.id)))?;
        let point = if row.conf == 0.0 {
            TrajectoryPoint::interpolated(row.bbox)
        } else {
            TrajectoryPoint::observed(row.bbox, row.conf)
        };
        match points.entry((id, row.frame)) {
            Entry::Occupied(_) => {
                return Err(IoError::parse(
                    path,
                    line,
                    format!("duplicate entry for id {id} in frame {}", row.frame),
                ))
            }
            Entry::Vacant(v) => {
                v.insert(point);
            }
        }
        order.push(row.frame);
    }
    warn_unsorted(path, order.into_iter());
    let mut set = TrajectorySet::new();
    for ((id, frame), point) in points {
        set.insert(id, frame, point);
    }
    Ok(set)
}

pub fn read_tracks(path: &Path) -> Result<TrajectorySet, IoError> {
    parse_tracks(&read_text(path)?, path)
}

fn push_row(out: &mut String, frame: Frame, id: i64, b: &BBox, conf: f64) {
    let _ = writeln!(
        out,
        "{frame},{id},{:.6},{:.6},{:.6},{:.6},{conf:.6},-1,-1,-1",
        b.x(),
        b.y(),
        b.w(),
        b.h()
    );
}

/// Rows sorted by frame, then id.
pub fn format_tracks(set: &TrajectorySet) -> String {
    let mut out = String::new();
    for (frame, id, p) in set.rows() {
        let conf = if p.interpolated { 0.0 } else { p.confidence };
        push_row(&mut out, frame, i64::from(id.0), &p.bbox, conf);
    }
    out
}

pub fn write_tracks(path: &Path, set: &TrajectorySet) -> Result<(), IoError> {
    write_file(path, format_tracks(set))
}

pub fn format_detections(frames: &BTreeMap<Frame, Vec<Detection>>) -> String {
    let mut out = String::new();
    for (&frame, dets) in frames {
        for d in dets {
            push_row(&mut out, frame, -1, &d.bbox, d.confidence);
        }
    }
    out
}

pub fn write_detections(path: &Path, frames: &BTreeMap<Frame, Vec<Detection>>) -> Result<(), IoError> {
    write_file(path, format_detections(frames))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("det.csv")
    }

    #[test]
    fn parses_detection_line() {
        let frames = parse_detections("1,-1,10,10,4,6,0.9,-1,-1,-1\n", p()).unwrap();
        let d = &frames[&1][0];
        assert_eq!(d.frame, 1);
        assert_eq!(d.bbox, BBox::new(10.0, 10.0, 4.0, 6.0).unwrap());
        assert_eq!(d.confidence, 0.9);
    }

    #[test]
    fn nine_fields_names_the_line() {
        let err = parse_detections("1,-1,10,10,4,6,0.9,-1,-1,-1\n1,-1,10,10,4,6,0.9,-1,-1\n", p()).unwrap_err();
        match &err {
            IoError::Parse { line, message, .. } => {
                assert_eq!(*line, 2);
                assert!(message.contains("10 fields"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().starts_with("det.csv:2:"));
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "0,-1,1,1,4,6,0.9,-1,-1,-1",
            "x,-1,1,1,4,6,0.9,-1,-1,-1",
            "1,-1,1,1,0,6,0.9,-1,-1,-1",
            "1,-1,1,1,4,6,1.5,-1,-1,-1",
            "1,-1,1,nan,4,6,0.5,-1,-1,-1",
        ] {
            assert!(parse_detections(bad, p()).is_err(), "{bad}");
        }
    }

    #[test]
    fn unsorted_frames_are_sorted_keeping_file_order_within_frame() {
        let text = "2,-1,0,0,1,1,1,-1,-1,-1\n1,-1,5,0,1,1,1,-1,-1,-1\n2,-1,9,0,1,1,1,-1,-1,-1\n";
        let frames = parse_detections(text, p()).unwrap();
        assert_eq!(frames.keys().copied().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(frames[&2][0].bbox.x(), 0.0);
        assert_eq!(frames[&2][1].bbox.x(), 9.0);
    }

    #[test]
    fn tracks_roundtrip_with_interpolation_marker() {
        let mut set = TrajectorySet::new();
        set.insert(TrackId(2), 1, TrajectoryPoint::observed(BBox::new(1.25, 2.5, 3.0, 4.0).unwrap(), 0.75));
        set.insert(TrackId(2), 2, TrajectoryPoint::interpolated(BBox::new(1.0 / 3.0, 2.0, 3.0, 4.0).unwrap()));
        set.insert(TrackId(1), 2, TrajectoryPoint::observed(BBox::new(9.0, 9.0, 1.0, 1.0).unwrap(), 1.0));
        let text = format_tracks(&set);
        assert!(text.starts_with("1,2,1.250000,2.500000,3.000000,4.000000,0.750000,-1,-1,-1\n"));
        let back = parse_tracks(&text, p()).unwrap();
        let q = back.get(TrackId(2)).unwrap().get(2).unwrap();
        assert!(q.interpolated);
        assert!((q.bbox.x() - 1.0 / 3.0).abs() < 1e-6);
        assert_eq!(back.point_count(), 3);
    }

    #[test]
    fn duplicate_track_entry_is_an_error() {
        let text = "1,1,0,0,1,1,1,-1,-1,-1\n1,1,0,0,1,1,1,-1,-1,-1\n";
        assert!(matches!(parse_tracks(text, p()), Err(IoError::Parse { line: 2, .. })));
        assert!(parse_tracks("1,-1,0,0,1,1,1,-1,-1,-1\n", p()).is_err());
    }
}
