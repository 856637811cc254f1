//! Lost-track buffering, re-identification within the refind window, gap
//! interpolation and spawning of new identities.

use std::collections::BTreeSet;

use crate::assignment::{iou_cost_matrix, solve, CostMatrix};
use crate::detection::Detection;
use crate::geometry::buffer_region;
use crate::trajectory::{Frame, TrackId};

use super::config::PopulationMode;
use super::track::{Track, TrackStatus};
use super::{PendingSpawn, Tracker};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RefindOutcome {
    /// Tracks that went missing this frame.
    pub lost: Vec<TrackId>,
    pub terminated: Vec<TrackId>,
    /// `(track, detection index, interpolated frame count)`.
    pub refound: Vec<(TrackId, usize, usize)>,
    pub spawned: Vec<TrackId>,
    /// Detections left without an identity.
    pub unclaimed: Vec<usize>,
}

/// Lifecycle update after the association stages of `frame`.
///
/// `claimed[d]` marks detections already taken; `matched` holds the ids that
/// received a detection this frame.
pub fn refind_update(
    tracker: &mut Tracker,
    frame: Frame,
    detections: &[Detection],
    claimed: &[bool],
    matched: &BTreeSet<TrackId>,
) -> RefindOutcome {
    let config = tracker.config().clone();
    let k = config.k;
    let mut outcome = RefindOutcome::default();

    // Expire buffered identities whose window has run out.
    for track in tracker.tracks_mut() {
        if track.status() == TrackStatus::Lost {
            let since = track.lost_since().expect("lost tracks record lost_since");
            if frame - since > k {
                track.terminate();
                outcome.terminated.push(track.id());
            }
        }
    }

    // Active tracks without a detection: buffer, or drop at the arena edge.
    for track in tracker.tracks_mut() {
        if track.is_active() && !matched.contains(&track.id()) {
            if near_boundary(track, &config) {
                track.terminate();
                outcome.terminated.push(track.id());
            } else {
                track.mark_lost(frame);
                outcome.lost.push(track.id());
            }
        }
    }

    let mut claimed = claimed.to_vec();
    if config.refind_enabled {
        // Ids without a detection this frame; reserved ids must lie inside it.
        let unassigned: BTreeSet<TrackId> = tracker
            .tracks()
            .iter()
            .filter(|t| t.status() != TrackStatus::Terminated && !matched.contains(&t.id()))
            .map(Track::id)
            .collect();
        let candidates: Vec<TrackId> = tracker
            .tracks()
            .iter()
            .filter(|t| {
                t.status() == TrackStatus::Lost
                    && t.lost_since().is_some_and(|s| s < frame)
                    && unassigned.contains(&t.id())
            })
            .map(Track::id)
            .collect();
        let free: Vec<usize> = (0..detections.len()).filter(|&d| !claimed[d]).collect();

        let mut costs = CostMatrix::forbidden(candidates.len(), free.len());
        for (i, &id) in candidates.iter().enumerate() {
            let track = tracker.track(id).expect("candidate exists");
            let last = track.last_box();
            let region = buffer_region(&last, k).expect("k validated at construction");
            let (lx, ly) = last.center();
            for (j, &d) in free.iter().enumerate() {
                let (dx, dy) = detections[d].bbox.center();
                if region.contains((dx, dy)) {
                    let dist = ((dx - lx).powi(2) + (dy - ly).powi(2)).sqrt();
                    costs.set(i, j, Some(dist)).expect("distance is a valid cost");
                }
            }
        }
        for (i, j) in solve(&costs).pairs {
            let id = candidates[i];
            let d = free[j];
            let gap = tracker
                .track_mut(id)
                .expect("candidate exists")
                .refind(&detections[d]);
            claimed[d] = true;
            outcome.refound.push((id, d, gap));
        }
    }

    let free: Vec<usize> = (0..detections.len()).filter(|&d| !claimed[d]).collect();
    match config.population_mode {
        PopulationMode::Fixed => outcome.unclaimed = free,
        PopulationMode::Open => {
            outcome.spawned = spawn(tracker, frame, detections, &free);
        }
    }
    outcome
}

fn near_boundary(track: &Track, config: &super::TrackerConfig) -> bool {
    let Some(arena) = config.arena else {
        return false;
    };
    let last = track.last_box();
    let (cx, cy) = last.center();
    let mx = config.boundary_margin * last.w();
    let my = config.boundary_margin * last.h();
    cx - arena.x() <= mx
        || arena.right() - cx <= mx
        || cy - arena.y() <= my
        || arena.bottom() - cy <= my
}

/// Promotes detections that stayed unmatched for `spawn_delay` consecutive
/// frames. Shorter chains wait in the pending list, linked frame to frame by
/// box IoU.
fn spawn(
    tracker: &mut Tracker,
    frame: Frame,
    detections: &[Detection],
    free: &[usize],
) -> Vec<TrackId> {
    let delay = tracker.config().spawn_delay.max(1) as usize;
    let tau = tracker.config().tau_match;

    let previous: Vec<PendingSpawn> = std::mem::take(&mut tracker.pending)
        .into_iter()
        .filter(|p| p.last_frame() + 1 == frame)
        .collect();
    let prev_boxes: Vec<_> = previous.iter().map(|p| p.last_box()).collect();
    let cur_boxes: Vec<_> = free.iter().map(|&d| detections[d].bbox).collect();
    let links = solve(&iou_cost_matrix(&prev_boxes, &cur_boxes, tau));

    let mut chains: Vec<(usize, Vec<Detection>)> = Vec::new();
    let mut linked = vec![false; free.len()];
    for &(p, j) in &links.pairs {
        linked[j] = true;
        let mut chain = previous[p].observations.clone();
        chain.push(detections[free[j]].clone());
        chains.push((free[j], chain));
    }
    for (j, &d) in free.iter().enumerate() {
        if !linked[j] {
            chains.push((d, vec![detections[d].clone()]));
        }
    }
    chains.sort_by_key(|(d, _)| *d);

    let mut spawned = Vec::new();
    for (_, chain) in chains {
        if chain.len() >= delay {
            let id = tracker.allocate_id();
            tracker.push_track(Track::from_observations(id, &chain));
            spawned.push(id);
        } else {
            tracker.pending.push(PendingSpawn { observations: chain });
        }
    }
    spawned
}
