//! Second association for contested overlaps: box IoU blended with the IoU
//! of the segmented entities.

use std::collections::BTreeSet;

use crate::assignment::{solve, CostMatrix, Matching};
use crate::detection::{Detection, MaskSource};
use crate::masks::entity_iou;
use crate::trajectory::{Frame, TrackId};

use super::association::{involved, lift, Cell, OverlapMatrix};
use super::{Tracker, Warning};

/// Score of one flagged `(track row, detection col)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub track: TrackId,
    pub row: usize,
    pub col: usize,
    pub box_iou: f64,
    /// `None` when either side had no entity mask.
    pub entity_iou: Option<f64>,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InteractionOutcome {
    pub matching: Matching,
    pub scores: Vec<PairScore>,
    pub warnings: Vec<Warning>,
}

/// Solves the contested subproblem on cost `1 - s`, with
/// `s = alpha * box_iou + (1 - alpha) * entity_iou` and gate `tau_match` on
/// `s`. Only flagged cells are eligible. A pair lacking a mask on either side
/// is scored by box IoU alone and reported as a warning.
pub fn interaction_associate(
    tracker: &Tracker,
    frame: Frame,
    ious: &OverlapMatrix,
    flagged: &BTreeSet<Cell>,
    detections: &[Detection],
    masks: &dyn MaskSource,
) -> InteractionOutcome {
    if flagged.is_empty() {
        return InteractionOutcome::default();
    }
    let config = tracker.config();
    let options = config.binarize_options();
    let (rows, cols) = involved(flagged);
    let rows: Vec<usize> = rows.into_iter().collect();
    let cols: Vec<usize> = cols.into_iter().collect();

    let track_masks: Vec<_> = rows
        .iter()
        .map(|&r| {
            tracker
                .track(ious.track_ids[r])
                .and_then(|t| t.entity_ref())
                .and_then(|key| masks.entity(&key, options))
        })
        .collect();
    let det_masks: Vec<_> = cols
        .iter()
        .map(|&c| {
            detections[c]
                .mask_ref
                .and_then(|key| masks.entity(&key, options))
        })
        .collect();

    let mut costs = CostMatrix::forbidden(rows.len(), cols.len());
    let mut scores = Vec::new();
    let mut warnings = Vec::new();
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            if !flagged.contains(&(r, c)) {
                continue;
            }
            let box_iou = ious.get(r, c);
            let entity = match (&track_masks[i], &det_masks[j]) {
                (Some(a), Some(b)) => Some(entity_iou(a, b)),
                (track_mask, det_mask) => {
                    warnings.push(Warning::MissingEntity {
                        frame,
                        track: ious.track_ids[r],
                        detection: c,
                        track_side: track_mask.is_none(),
                        detection_side: det_mask.is_none(),
                    });
                    None
                }
            };
            let combined = match entity {
                Some(e) => config.alpha * box_iou + (1.0 - config.alpha) * e,
                None => box_iou,
            };
            if combined >= config.tau_match {
                costs
                    .set(i, j, Some(1.0 - combined))
                    .expect("combined score lies in [0, 1]");
            }
            scores.push(PairScore {
                track: ious.track_ids[r],
                row: r,
                col: c,
                box_iou,
                entity_iou: entity,
                combined,
            });
        }
    }

    InteractionOutcome {
        matching: lift(&solve(&costs), &rows, &cols, ious.rows(), ious.cols()),
        scores,
        warnings,
    }
}
