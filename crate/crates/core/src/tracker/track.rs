use crate::detection::{Detection, MaskRef};
use crate::geometry::{interpolate_boxes, BBox};
use crate::trajectory::{Frame, TrackId, Trajectory, TrajectoryPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Active,
    /// Missing since `lost_since`, waiting in the refind buffer.
    Lost,
    Terminated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    id: TrackId,
    status: TrackStatus,
    history: Trajectory,
    last_seen: Frame,
    lost_since: Option<Frame>,
    entity_ref: Option<MaskRef>,
}

impl Track {
    pub(crate) fn start(id: TrackId, detection: &Detection) -> Self {
        let mut history = Trajectory::new();
        history.insert(
            detection.frame,
            TrajectoryPoint::observed(detection.bbox, detection.confidence),
        );
        Track {
            id,
            status: TrackStatus::Active,
            history,
            last_seen: detection.frame,
            lost_since: None,
            entity_ref: detection.mask_ref,
        }
    }

    /// Track seeded with several observations (delayed spawning).
    pub(crate) fn from_observations(id: TrackId, observations: &[Detection]) -> Self {
        let mut track = Track::start(id, &observations[0]);
        for det in &observations[1..] {
            track.observe(det);
        }
        track
    }

    pub fn id(&self) -> TrackId {
        self.id
    }

    pub fn status(&self) -> TrackStatus {
        self.status
    }

    pub fn history(&self) -> &Trajectory {
        &self.history
    }

    pub fn last_seen(&self) -> Frame {
        self.last_seen
    }

    pub fn lost_since(&self) -> Option<Frame> {
        self.lost_since
    }

    /// Mask reference of the most recent matched detection.
    pub fn entity_ref(&self) -> Option<MaskRef> {
        self.entity_ref
    }

    /// Box observed at `last_seen`. Interpolated boxes never take this role.
    pub fn last_box(&self) -> BBox {
        self.history
            .get(self.last_seen)
            .expect("history holds the last observed frame")
            .bbox
    }

    pub fn is_active(&self) -> bool {
        self.status == TrackStatus::Active
    }

    pub(crate) fn observe(&mut self, detection: &Detection) {
        self.history.insert(
            detection.frame,
            TrajectoryPoint::observed(detection.bbox, detection.confidence),
        );
        self.last_seen = detection.frame;
        self.status = TrackStatus::Active;
        self.lost_since = None;
        self.entity_ref = detection.mask_ref;
    }

    /// Fills the gap since `last_seen` with interpolated boxes, then records
    /// the new observation.
    pub(crate) fn refind(&mut self, detection: &Detection) -> usize {
        let start = self.last_box();
        let gap = detection.frame.saturating_sub(self.last_seen + 1) as usize;
        for (i, bbox) in interpolate_boxes(&start, &detection.bbox, gap).into_iter().enumerate() {
            self.history
                .insert(self.last_seen + 1 + i as Frame, TrajectoryPoint::interpolated(bbox));
        }
        self.observe(detection);
        gap
    }

    pub(crate) fn mark_lost(&mut self, frame: Frame) {
        self.status = TrackStatus::Lost;
        self.lost_since = Some(frame);
    }

    pub(crate) fn terminate(&mut self) {
        self.status = TrackStatus::Terminated;
    }
}
