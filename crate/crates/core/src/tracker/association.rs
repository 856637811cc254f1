//! Frame-to-frame overlap computation and the first (box IoU) association.

use std::collections::BTreeSet;

use crate::assignment::{solve, CostMatrix, Matching};
use crate::detection::Detection;
use crate::geometry::iou;
use crate::trajectory::TrackId;

use super::{Tracker, TrackerConfig};

/// Box IoU between every active track (at its last observed box) and every
/// detection of the incoming frame. Rows follow ascending track id.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    pub track_ids: Vec<TrackId>,
    pub values: Vec<Vec<f64>>,
    pub n_detections: usize,
}

impl OverlapMatrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row][col]
    }

    pub fn rows(&self) -> usize {
        self.track_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.n_detections
    }
}

/// An entry `(row, col)` of the overlap matrix.
pub type Cell = (usize, usize);

pub fn compute_overlaps(tracker: &Tracker, detections: &[Detection]) -> OverlapMatrix {
    let active: Vec<_> = tracker.tracks().iter().filter(|t| t.is_active()).collect();
    OverlapMatrix {
        track_ids: active.iter().map(|t| t.id()).collect(),
        values: active
            .iter()
            .map(|t| {
                let last = t.last_box();
                detections.iter().map(|d| iou(&last, &d.bbox)).collect()
            })
            .collect(),
        n_detections: detections.len(),
    }
}

/// Flags contested overlaps. A row or column is ambiguous when at least two
/// of its entries exceed `tau_ambiguous`; every above-threshold entry of an
/// ambiguous row or column is flagged.
pub fn detect_ambiguities(ious: &[Vec<f64>], tau_ambiguous: f64) -> BTreeSet<Cell> {
    let rows = ious.len();
    let cols = ious.first().map_or(0, Vec::len);
    let above = |r: usize, c: usize| ious[r][c] > tau_ambiguous;

    let mut flagged = BTreeSet::new();
    for r in 0..rows {
        let hits: Vec<usize> = (0..cols).filter(|&c| above(r, c)).collect();
        if hits.len() >= 2 {
            flagged.extend(hits.into_iter().map(|c| (r, c)));
        }
    }
    for c in 0..cols {
        let hits: Vec<usize> = (0..rows).filter(|&r| above(r, c)).collect();
        if hits.len() >= 2 {
            flagged.extend(hits.into_iter().map(|r| (r, c)));
        }
    }
    flagged
}

/// Rows and columns touched by a flagged cell.
pub(crate) fn involved(flagged: &BTreeSet<Cell>) -> (BTreeSet<usize>, BTreeSet<usize>) {
    (
        flagged.iter().map(|c| c.0).collect(),
        flagged.iter().map(|c| c.1).collect(),
    )
}

/// Box IoU assignment over the rows and columns not involved in any flagged
/// cell, gated at `tau_match`. Pairs are reported in full-matrix indices.
pub fn basic_associate(
    ious: &OverlapMatrix,
    flagged: &BTreeSet<Cell>,
    config: &TrackerConfig,
) -> Matching {
    let (busy_rows, busy_cols) = involved(flagged);
    let rows: Vec<usize> = (0..ious.rows()).filter(|r| !busy_rows.contains(r)).collect();
    let cols: Vec<usize> = (0..ious.cols()).filter(|c| !busy_cols.contains(c)).collect();

    let mut costs = CostMatrix::forbidden(rows.len(), cols.len());
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            let v = ious.get(r, c);
            if v >= config.tau_match {
                costs
                    .set(i, j, Some(1.0 - v))
                    .expect("1 - IoU is a valid cost");
            }
        }
    }
    lift(&solve(&costs), &rows, &cols, ious.rows(), ious.cols())
}

/// Maps a matching on a row/column subset back to full-matrix indices.
pub(crate) fn lift(
    sub: &Matching,
    rows: &[usize],
    cols: &[usize],
    n_rows: usize,
    n_cols: usize,
) -> Matching {
    let pairs: Vec<Cell> = sub.pairs.iter().map(|&(i, j)| (rows[i], cols[j])).collect();
    let mut row_used = vec![false; n_rows];
    let mut col_used = vec![false; n_cols];
    for &(r, c) in &pairs {
        row_used[r] = true;
        col_used[c] = true;
    }
    Matching {
        pairs,
        unmatched_rows: rows.iter().copied().filter(|&r| !row_used[r]).collect(),
        unmatched_cols: cols.iter().copied().filter(|&c| !col_used[c]).collect(),
    }
}
