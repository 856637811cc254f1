//! Identity-labelled box sequences shared by the tracker output, ground
//! truth, metrics and file I/O.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::BBox;

pub type Frame = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrackId(pub u32);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub bbox: BBox,
    pub confidence: f64,
    /// Estimated by the refind step rather than observed.
    pub interpolated: bool,
}

impl TrajectoryPoint {
    pub fn observed(bbox: BBox, confidence: f64) -> Self {
        TrajectoryPoint {
            bbox,
            confidence,
            interpolated: false,
        }
    }

    pub fn interpolated(bbox: BBox) -> Self {
        TrajectoryPoint {
            bbox,
            confidence: 0.0,
            interpolated: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    points: BTreeMap<Frame, TrajectoryPoint>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, frame: Frame, point: TrajectoryPoint) -> Option<TrajectoryPoint> {
        self.points.insert(frame, point)
    }

    pub fn get(&self, frame: Frame) -> Option<&TrajectoryPoint> {
        self.points.get(&frame)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points in ascending frame order.
    pub fn iter(&self) -> impl Iterator<Item = (Frame, &TrajectoryPoint)> + '_ {
        self.points.iter().map(|(&f, p)| (f, p))
    }

    pub fn first_frame(&self) -> Option<Frame> {
        self.points.keys().next().copied()
    }

    pub fn last_frame(&self) -> Option<Frame> {
        self.points.keys().next_back().copied()
    }

    /// Latest frame holding an observed (non-interpolated) point.
    pub fn last_observed(&self) -> Option<(Frame, &TrajectoryPoint)> {
        self.points
            .iter()
            .rev()
            .find(|(_, p)| !p.interpolated)
            .map(|(&f, p)| (f, p))
    }

    /// Drops every point after `frame`.
    pub fn truncate_after(&mut self, frame: Frame) {
        if frame < Frame::MAX {
            self.points.split_off(&(frame + 1));
        }
    }
}

/// Trajectories keyed by identity, iterated in ascending id order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectorySet {
    tracks: BTreeMap<TrackId, Trajectory>,
}

impl TrajectorySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: TrackId, frame: Frame, point: TrajectoryPoint) {
        self.tracks.entry(id).or_default().insert(frame, point);
    }

    pub fn insert_trajectory(&mut self, id: TrackId, trajectory: Trajectory) {
        self.tracks.insert(id, trajectory);
    }

    pub fn get(&self, id: TrackId) -> Option<&Trajectory> {
        self.tracks.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (TrackId, &Trajectory)> + '_ {
        self.tracks.iter().map(|(&id, t)| (id, t))
    }

    pub fn ids(&self) -> impl Iterator<Item = TrackId> + '_ {
        self.tracks.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Total number of boxes over all trajectories.
    pub fn point_count(&self) -> usize {
        self.tracks.values().map(Trajectory::len).sum()
    }

    /// Every frame that holds at least one box, ascending.
    pub fn frames(&self) -> BTreeSet<Frame> {
        self.tracks
            .values()
            .flat_map(|t| t.points.keys().copied())
            .collect()
    }

    /// Boxes present at `frame`, in ascending id order.
    pub fn boxes_at(&self, frame: Frame) -> Vec<(TrackId, BBox)> {
        self.tracks
            .iter()
            .filter_map(|(&id, t)| t.get(frame).map(|p| (id, p.bbox)))
            .collect()
    }

    /// Rows as `(frame, id, point)` sorted by frame, then id.
    pub fn rows(&self) -> Vec<(Frame, TrackId, TrajectoryPoint)> {
        let mut rows: Vec<_> = self
            .tracks
            .iter()
            .flat_map(|(&id, t)| t.iter().map(move |(f, p)| (f, id, *p)))
            .collect();
        rows.sort_by_key(|&(f, id, _)| (f, id));
        rows
    }
}

impl FromIterator<(TrackId, Trajectory)> for TrajectorySet {
    fn from_iter<I: IntoIterator<Item = (TrackId, Trajectory)>>(iter: I) -> Self {
        TrajectorySet {
            tracks: iter.into_iter().collect(),
        }
    }
}
