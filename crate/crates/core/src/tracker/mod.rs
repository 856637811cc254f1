//! Detection-to-trajectory tracking by frame-to-frame IoU association.
//!
//! Each [`Tracker::step`] runs, in order:
//!
//! 1. [`compute_overlaps`] between active tracks and the new detections;
//! 2. [`detect_ambiguities`] to find contested rows and columns;
//! 3. [`basic_associate`] on the uncontested part (box IoU, Hungarian);
//! 4. [`interaction_associate`] on the contested part (box + entity IoU);
//! 5. [`refind_update`] for lost-track buffering, re-identification,
//!    interpolation and spawning.
//!
//! No motion model is used; the last observed box is the prediction.

mod association;
mod config;
mod interaction;
mod refind;
mod track;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::detection::{Detection, MaskSource};
use crate::geometry::BBox;
use crate::trajectory::{Frame, TrackId, TrajectorySet};

pub use association::{basic_associate, compute_overlaps, detect_ambiguities, Cell, OverlapMatrix};
pub use config::{ConfigError, PopulationMode, TrackerConfig};
pub use interaction::{interaction_associate, InteractionOutcome, PairScore};
pub use refind::{refind_update, RefindOutcome};
pub use track::{Track, TrackStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("frame {got} does not follow frame {previous}")]
    OutOfOrder { previous: Frame, got: Frame },
    #[error("detection {index} belongs to frame {got}, expected {expected}")]
    FrameMismatch {
        index: usize,
        expected: Frame,
        got: Frame,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Non-fatal events worth surfacing to the user.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A contested pair fell back to box IoU because a mask was missing.
    MissingEntity {
        frame: Frame,
        track: TrackId,
        detection: usize,
        track_side: bool,
        detection_side: bool,
    },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::MissingEntity {
                frame,
                track,
                detection,
                track_side,
                detection_side,
            } => {
                let side = match (track_side, detection_side) {
                    (true, true) => "track and detection",
                    (true, false) => "track",
                    _ => "detection",
                };
                write!(
                    f,
                    "frame {frame}: no entity mask for {side} (track {track}, detection {detection}); using box IoU"
                )
            }
        }
    }
}

/// Detections waiting out the spawn delay.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PendingSpawn {
    observations: Vec<Detection>,
}

impl PendingSpawn {
    fn last_frame(&self) -> Frame {
        self.observations.last().expect("non-empty chain").frame
    }

    fn last_box(&self) -> BBox {
        self.observations.last().expect("non-empty chain").bbox
    }
}

/// Everything that happened in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub frame: Frame,
    /// `(id, box)` of every active track after the step, ascending id.
    pub output: Vec<(TrackId, BBox)>,
    pub basic_pairs: Vec<(TrackId, usize)>,
    pub interaction_pairs: Vec<(TrackId, usize)>,
    /// Every contested pair the interaction stage scored.
    pub interaction_scores: Vec<PairScore>,
    pub lifecycle: RefindOutcome,
}

/// Tracking state for one sequence. Ids start at 1 and are never reused.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u32,
    frame: Option<Frame>,
    pending: Vec<PendingSpawn>,
    unclaimed: Vec<(Frame, usize)>,
    warnings: Vec<Warning>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self, TrackError> {
        config.validate()?;
        Ok(Tracker {
            config,
            tracks: Vec::new(),
            next_id: 1,
            frame: None,
            pending: Vec::new(),
            unclaimed: Vec::new(),
            warnings: Vec::new(),
        })
    }

    /// One active track per detection, ids `1..=n` in detection order.
    pub fn init(
        frame: Frame,
        detections: &[Detection],
        config: TrackerConfig,
    ) -> Result<Self, TrackError> {
        let mut tracker = Tracker::new(config)?;
        check_frame(frame, detections)?;
        for det in detections {
            let id = tracker.allocate_id();
            tracker.tracks.push(Track::start(id, det));
        }
        tracker.frame = Some(frame);
        Ok(tracker)
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// All tracks ever created, in ascending id order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn track(&self, id: TrackId) -> Option<&Track> {
        self.tracks
            .binary_search_by_key(&id, Track::id)
            .ok()
            .map(|i| &self.tracks[i])
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    pub fn frame(&self) -> Option<Frame> {
        self.frame
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// Detections that never received an identity (fixed population).
    pub fn unclaimed(&self) -> &[(Frame, usize)] {
        &self.unclaimed
    }

    pub fn active_ids(&self) -> Vec<TrackId> {
        self.tracks
            .iter()
            .filter(|t| t.is_active())
            .map(Track::id)
            .collect()
    }

    pub(crate) fn tracks_mut(&mut self) -> impl Iterator<Item = &mut Track> {
        self.tracks.iter_mut()
    }

    pub(crate) fn track_mut(&mut self, id: TrackId) -> Option<&mut Track> {
        self.tracks
            .binary_search_by_key(&id, Track::id)
            .ok()
            .map(move |i| &mut self.tracks[i])
    }

    pub(crate) fn allocate_id(&mut self) -> TrackId {
        let id = TrackId(self.next_id);
        self.next_id += 1;
        id
    }

    pub(crate) fn push_track(&mut self, track: Track) {
        debug_assert!(self.tracks.last().is_none_or(|t| t.id() < track.id()));
        self.tracks.push(track);
    }

    /// Processes one frame and returns the active `(id, box)` list.
    pub fn step(
        &mut self,
        frame: Frame,
        detections: &[Detection],
        masks: &dyn MaskSource,
    ) -> Result<Vec<(TrackId, BBox)>, TrackError> {
        Ok(self.step_detailed(frame, detections, masks)?.output)
    }

    pub fn step_detailed(
        &mut self,
        frame: Frame,
        detections: &[Detection],
        masks: &dyn MaskSource,
    ) -> Result<StepReport, TrackError> {
        if let Some(previous) = self.frame {
            if frame <= previous {
                return Err(TrackError::OutOfOrder { previous, got: frame });
            }
        }
        check_frame(frame, detections)?;

        let ious = compute_overlaps(self, detections);
        let flagged = if self.config.interaction_enabled {
            detect_ambiguities(&ious.values, self.config.tau_ambiguous)
        } else {
            BTreeSet::new()
        };
        let basic = basic_associate(&ious, &flagged, &self.config);
        let interaction = interaction_associate(self, frame, &ious, &flagged, detections, masks);
        self.warnings.extend(interaction.warnings.iter().cloned());

        let mut claimed = vec![false; detections.len()];
        let mut matched = BTreeSet::new();
        let mut commit = |pairs: &[(usize, usize)], this: &mut Tracker| {
            let mut out = Vec::new();
            for &(r, c) in pairs {
                let id = ious.track_ids[r];
                this.track_mut(id).expect("active track").observe(&detections[c]);
                claimed[c] = true;
                matched.insert(id);
                out.push((id, c));
            }
            out
        };
        let basic_pairs = commit(&basic.pairs, self);
        let interaction_pairs = commit(&interaction.matching.pairs, self);

        let lifecycle = refind_update(self, frame, detections, &claimed, &matched);
        self.unclaimed
            .extend(lifecycle.unclaimed.iter().map(|&d| (frame, d)));
        self.frame = Some(frame);

        Ok(StepReport {
            frame,
            output: self.active_output(),
            basic_pairs,
            interaction_pairs,
            interaction_scores: interaction.scores,
            lifecycle,
        })
    }

    fn active_output(&self) -> Vec<(TrackId, BBox)> {
        self.tracks
            .iter()
            .filter(|t| t.is_active())
            .map(|t| (t.id(), t.last_box()))
            .collect()
    }

    /// Frame-sorted trajectories of every identity, interpolated boxes
    /// included. Unresolved trailing gaps are cut at the last observation.
    pub fn finalize(&self) -> TrajectorySet {
        self.tracks
            .iter()
            .map(|t| {
                let mut history = t.history().clone();
                history.truncate_after(t.last_seen());
                (t.id(), history)
            })
            .collect()
    }
}

fn check_frame(frame: Frame, detections: &[Detection]) -> Result<(), TrackError> {
    match detections.iter().position(|d| d.frame != frame) {
        Some(index) => Err(TrackError::FrameMismatch {
            index,
            expected: frame,
            got: detections[index].frame,
        }),
        None => Ok(()),
    }
}

/// Result of tracking a whole sequence.
#[derive(Debug, Clone)]
pub struct TrackingRun {
    pub trajectories: TrajectorySet,
    pub warnings: Vec<Warning>,
    pub tracker: Tracker,
}

/// Tracks every frame from the first to the last key of `frames`; frames
/// missing from the map are stepped with no detections.
pub fn track_sequence(
    frames: &BTreeMap<Frame, Vec<Detection>>,
    masks: &dyn MaskSource,
    config: TrackerConfig,
) -> Result<TrackingRun, TrackError> {
    let mut iter = frames.iter();
    let Some((&first, first_dets)) = iter.next() else {
        let tracker = Tracker::new(config)?;
        return Ok(TrackingRun {
            trajectories: TrajectorySet::new(),
            warnings: Vec::new(),
            tracker,
        });
    };
    let mut tracker = Tracker::init(first, first_dets, config)?;
    let last = *frames.keys().next_back().expect("non-empty");
    let empty = Vec::new();
    for frame in first + 1..=last {
        let dets = frames.get(&frame).unwrap_or(&empty);
        tracker.step(frame, dets, masks)?;
    }
    Ok(TrackingRun {
        trajectories: tracker.finalize(),
        warnings: tracker.warnings().to_vec(),
        tracker,
    })
}
