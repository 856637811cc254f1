//! CLEAR-MOT accuracy and identity metrics.
//!
//! * `MOTA = 1 - sum_t(FN_t + FP_t + IDSW_t) / sum_t GT_t`
//! * `IDF1 = 2 IDTP / (2 IDTP + IDFP + IDFN)`
//! * `IDP = IDTP / (IDTP + IDFP)`, `IDR = IDTP / (IDTP + IDFN)`
//!
//! Scores whose denominator is zero are reported as `None` (not applicable).
//! Interpolated hypothesis boxes are scored like any other box.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::assignment::{iou_cost_matrix, max_weight_matching, solve};
use crate::geometry::{iou, BBox};
use crate::trajectory::{TrackId, TrajectorySet};

pub const DEFAULT_IOU_GATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FrameCounts {
    pub gt: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub id_switches: usize,
    pub matches: usize,
}

/// Per-frame CLEAR bookkeeping with a persistent gt -> hypothesis
/// correspondence map.
#[derive(Debug, Clone)]
pub struct ClearAccumulator {
    iou_gate: f64,
    correspondence: BTreeMap<TrackId, TrackId>,
    frames: Vec<FrameCounts>,
}

impl ClearAccumulator {
    pub fn new(iou_gate: f64) -> Self {
        ClearAccumulator {
            iou_gate,
            correspondence: BTreeMap::new(),
            frames: Vec::new(),
        }
    }

    /// Scores one frame. Both slices must have unique ids.
    pub fn update(&mut self, gt: &[(TrackId, BBox)], hyp: &[(TrackId, BBox)]) -> FrameCounts {
        let mut gt_done = vec![false; gt.len()];
        let mut hyp_done = vec![false; hyp.len()];
        let hyp_index: BTreeMap<TrackId, usize> =
            hyp.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
        let mut counts = FrameCounts {
            gt: gt.len(),
            ..FrameCounts::default()
        };

        // Keep correspondences that still overlap.
        for (gi, (gid, gbox)) in gt.iter().enumerate() {
            let Some(hid) = self.correspondence.get(gid) else {
                continue;
            };
            let Some(&hi) = hyp_index.get(hid) else {
                continue;
            };
            if !hyp_done[hi] && iou(gbox, &hyp[hi].1) >= self.iou_gate {
                gt_done[gi] = true;
                hyp_done[hi] = true;
                counts.matches += 1;
            }
        }

        // Optimal matching of the rest.
        let free_gt: Vec<usize> = (0..gt.len()).filter(|&i| !gt_done[i]).collect();
        let free_hyp: Vec<usize> = (0..hyp.len()).filter(|&i| !hyp_done[i]).collect();
        let gt_boxes: Vec<BBox> = free_gt.iter().map(|&i| gt[i].1).collect();
        let hyp_boxes: Vec<BBox> = free_hyp.iter().map(|&i| hyp[i].1).collect();
        let matching = solve(&iou_cost_matrix(&gt_boxes, &hyp_boxes, self.iou_gate));
        for (a, b) in matching.pairs {
            let (gi, hi) = (free_gt[a], free_hyp[b]);
            gt_done[gi] = true;
            hyp_done[hi] = true;
            counts.matches += 1;
            let (gid, hid) = (gt[gi].0, hyp[hi].0);
            if let Some(prev) = self.correspondence.insert(gid, hid) {
                if prev != hid {
                    counts.id_switches += 1;
                }
            }
        }

        counts.false_negatives = gt_done.iter().filter(|&&d| !d).count();
        counts.false_positives = hyp_done.iter().filter(|&&d| !d).count();
        self.frames.push(counts);
        counts
    }

    pub fn frames(&self) -> &[FrameCounts] {
        &self.frames
    }

    pub fn finish(&self) -> ClearMot {
        let mut out = ClearMot::default();
        for f in &self.frames {
            out.gt += f.gt;
            out.false_negatives += f.false_negatives;
            out.false_positives += f.false_positives;
            out.id_switches += f.id_switches;
            out.matches += f.matches;
        }
        out.mota = mota(out.false_negatives, out.false_positives, out.id_switches, out.gt);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClearMot {
    pub mota: Option<f64>,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub id_switches: usize,
    pub gt: usize,
    pub matches: usize,
}

fn mota(fn_: usize, fp: usize, idsw: usize, gt: usize) -> Option<f64> {
    (gt > 0).then(|| 1.0 - (fn_ + fp + idsw) as f64 / gt as f64)
}

pub fn clear_mot(gt: &TrajectorySet, hyp: &TrajectorySet, iou_gate: f64) -> ClearMot {
    let mut acc = ClearAccumulator::new(iou_gate);
    let mut frames = gt.frames();
    frames.extend(hyp.frames());
    for frame in frames {
        acc.update(&gt.boxes_at(frame), &hyp.boxes_at(frame));
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IdMetrics {
    pub idf1: Option<f64>,
    pub idp: Option<f64>,
    pub idr: Option<f64>,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
}

impl IdMetrics {
    pub fn from_counts(idtp: usize, idfp: usize, idfn: usize) -> Self {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        IdMetrics {
            idf1: ratio(2 * idtp, 2 * idtp + idfp + idfn),
            idp: ratio(idtp, idtp + idfp),
            idr: ratio(idtp, idtp + idfn),
            idtp,
            idfp,
            idfn,
        }
    }
}

/// Frames in which a gt and a hypothesis trajectory overlap by at least
/// `iou_gate`, for every (gt, hyp) pair in ascending id order.
pub fn identity_overlap_counts(gt: &TrajectorySet, hyp: &TrajectorySet, iou_gate: f64) -> Vec<Vec<f64>> {
    gt.iter()
        .map(|(_, g)| {
            hyp.iter()
                .map(|(_, h)| {
                    g.iter()
                        .filter(|(f, gp)| {
                            h.get(*f)
                                .is_some_and(|hp| iou(&gp.bbox, &hp.bbox) >= iou_gate)
                        })
                        .count() as f64
                })
                .collect()
        })
        .collect()
}

/// Identity metrics under the one-to-one trajectory matching that maximizes
/// the number of co-located frames.
pub fn id_metrics(gt: &TrajectorySet, hyp: &TrajectorySet, iou_gate: f64) -> IdMetrics {
    let weights = identity_overlap_counts(gt, hyp, iou_gate);
    let matching = max_weight_matching(&weights);
    let idtp: usize = matching
        .pairs
        .iter()
        .map(|&(g, h)| weights[g][h] as usize)
        .sum();
    IdMetrics::from_counts(idtp, hyp.point_count() - idtp, gt.point_count() - idtp)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceReport {
    pub name: String,
    pub clear: ClearMot,
    pub identity: IdMetrics,
}

/// Metrics over one or more sequences. Totals sum the raw counters of every
/// sequence and recompute the scores from them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub iou_gate: f64,
    pub mota: Option<f64>,
    pub idf1: Option<f64>,
    pub idp: Option<f64>,
    pub idr: Option<f64>,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub id_switches: usize,
    pub gt: usize,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
    pub sequences: Vec<SequenceReport>,
}

pub fn evaluate_sequence(name: &str, gt: &TrajectorySet, hyp: &TrajectorySet, iou_gate: f64) -> SequenceReport {
    SequenceReport {
        name: name.to_string(),
        clear: clear_mot(gt, hyp, iou_gate),
        identity: id_metrics(gt, hyp, iou_gate),
    }
}

impl MetricsReport {
    pub fn from_sequences(sequences: Vec<SequenceReport>, iou_gate: f64) -> Self {
        let sum = |f: fn(&SequenceReport) -> usize| sequences.iter().map(f).sum::<usize>();
        let fn_ = sum(|s| s.clear.false_negatives);
        let fp = sum(|s| s.clear.false_positives);
        let idsw = sum(|s| s.clear.id_switches);
        let gt = sum(|s| s.clear.gt);
        let identity = IdMetrics::from_counts(
            sum(|s| s.identity.idtp),
            sum(|s| s.identity.idfp),
            sum(|s| s.identity.idfn),
        );
        MetricsReport {
            iou_gate,
            mota: mota(fn_, fp, idsw, gt),
            idf1: identity.idf1,
            idp: identity.idp,
            idr: identity.idr,
            false_negatives: fn_,
            false_positives: fp,
            id_switches: idsw,
            gt,
            idtp: identity.idtp,
            idfp: identity.idfp,
            idfn: identity.idfn,
            sequences,
        }
    }

    /// Human-readable summary with the direction of every metric.
    pub fn to_text(&self) -> String {
        let score = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
        let mut out = String::new();
        let _ = writeln!(out, "iou gate: {}", self.iou_gate);
        for s in &self.sequences {
            let _ = writeln!(
                out,
                "[{}] MOTA {} IDF1 {} IDP {} IDR {} IDSW {} FN {} FP {} GT {}",
                s.name,
                score(s.clear.mota),
                score(s.identity.idf1),
                score(s.identity.idp),
                score(s.identity.idr),
                s.clear.id_switches,
                s.clear.false_negatives,
                s.clear.false_positives,
                s.clear.gt,
            );
        }
        let _ = writeln!(out, "MOTA  {}  (higher is better)", score(self.mota));
        let _ = writeln!(out, "IDF1  {}  (higher is better)", score(self.idf1));
        let _ = writeln!(out, "IDP   {}  (higher is better)", score(self.idp));
        let _ = writeln!(out, "IDR   {}  (higher is better)", score(self.idr));
        let _ = writeln!(out, "IDSW  {}  (lower is better)", self.id_switches);
        let _ = writeln!(out, "FN    {}  (lower is better)", self.false_negatives);
        let _ = writeln!(out, "FP    {}  (lower is better)", self.false_positives);
        let _ = writeln!(out, "GT    {}", self.gt);
        let _ = writeln!(out, "IDTP  {}  IDFP {}  IDFN {}", self.idtp, self.idfp, self.idfn);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TrajectoryPoint;

    fn bx(x: f64, y: f64) -> BBox {
        BBox::new(x, y, 10.0, 10.0).unwrap()
    }

    fn put(set: &mut TrajectorySet, id: u32, frame: u32, b: BBox) {
        set.insert(TrackId(id), frame, TrajectoryPoint::observed(b, 1.0));
    }

    /// 10 well separated objects over 10 frames.
    fn grid_gt() -> TrajectorySet {
        let mut gt = TrajectorySet::new();
        for id in 1..=10 {
            for f in 1..=10 {
                put(&mut gt, id, f, bx(id as f64 * 50.0, f as f64));
            }
        }
        gt
    }

    #[test]
    fn perfect_tracking() {
        let gt = grid_gt();
        let c = clear_mot(&gt, &gt, 0.5);
        assert_eq!(c.mota, Some(1.0));
        assert_eq!((c.false_negatives, c.false_positives, c.id_switches), (0, 0, 0));
        let id = id_metrics(&gt, &gt, 0.5);
        assert_eq!((id.idf1, id.idp, id.idr), (Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn one_miss_one_spurious() {
        let gt = grid_gt();
        let mut hyp = TrajectorySet::new();
        for (id, t) in gt.iter() {
            for (f, p) in t.iter() {
                if !(id == TrackId(3) && f == 5) {
                    put(&mut hyp, id.0 + 100, f, p.bbox);
                }
            }
        }
        put(&mut hyp, 999, 7, bx(2000.0, 2000.0));
        let c = clear_mot(&gt, &hyp, 0.5);
        assert_eq!(c.gt, 100);
        assert_eq!((c.false_negatives, c.false_positives, c.id_switches), (1, 1, 0));
        assert!((c.mota.unwrap() - 0.98).abs() < 1e-12);
    }

    fn split_identity() -> (TrajectorySet, TrajectorySet) {
        let mut gt = TrajectorySet::new();
        let mut hyp = TrajectorySet::new();
        for f in 1..=4 {
            put(&mut gt, 1, f, bx(0.0, 0.0));
            put(&mut hyp, if f <= 2 { 1 } else { 2 }, f, bx(0.0, 0.0));
        }
        (gt, hyp)
    }

    #[test]
    fn split_identity_counts_one_switch() {
        let (gt, hyp) = split_identity();
        let c = clear_mot(&gt, &hyp, 0.5);
        assert_eq!(c.id_switches, 1);
        assert_eq!(c.mota, Some(0.75));
        let id = id_metrics(&gt, &hyp, 0.5);
        assert_eq!((id.idtp, id.idfn, id.idfp), (2, 2, 2));
        assert_eq!(id.idf1, Some(0.5));
    }

    #[test]
    fn id_scores_from_counts() {
        let m = IdMetrics::from_counts(9, 1, 1);
        assert!((m.idf1.unwrap() - 0.9).abs() < 1e-15);
        assert!((m.idp.unwrap() - 0.9).abs() < 1e-15);
        assert!((m.idr.unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn empty_inputs_are_not_applicable() {
        let empty = TrajectorySet::new();
        assert_eq!(clear_mot(&empty, &empty, 0.5).mota, None);
        let id = id_metrics(&empty, &empty, 0.5);
        assert_eq!((id.idf1, id.idp, id.idr), (None, None, None));
    }

    #[test]
    fn mota_can_be_negative() {
        let mut gt = TrajectorySet::new();
        put(&mut gt, 1, 1, bx(0.0, 0.0));
        let mut hyp = TrajectorySet::new();
        put(&mut hyp, 1, 1, bx(500.0, 0.0));
        put(&mut hyp, 2, 1, bx(900.0, 0.0));
        assert_eq!(clear_mot(&gt, &hyp, 0.5).mota, Some(-2.0));
    }

    #[test]
    fn persisting_correspondence_beats_better_overlap() {
        // frame 2: hyp 2 overlaps gt 1 more, but hyp 1 still passes the gate
        let mut gt = TrajectorySet::new();
        let mut hyp = TrajectorySet::new();
        put(&mut gt, 1, 1, bx(0.0, 0.0));
        put(&mut hyp, 1, 1, bx(0.0, 0.0));
        put(&mut gt, 1, 2, bx(0.0, 0.0));
        put(&mut hyp, 1, 2, bx(2.0, 0.0));
        put(&mut hyp, 2, 2, bx(0.0, 0.0));
        let c = clear_mot(&gt, &hyp, 0.5);
        assert_eq!((c.id_switches, c.false_positives), (0, 1));
    }

    #[test]
    fn report_totals_recompute_scores() {
        let (gt, hyp) = split_identity();
        let a = evaluate_sequence("a", &gt, &hyp, 0.5);
        let b = evaluate_sequence("b", &gt, &gt, 0.5);
        let r = MetricsReport::from_sequences(vec![a, b], 0.5);
        assert_eq!(r.gt, 8);
        assert_eq!(r.id_switches, 1);
        assert_eq!(r.mota, Some(1.0 - 1.0 / 8.0));
        assert_eq!(r.idtp, 6);
        assert!(r.to_text().contains("MOTA  0.875000  (higher is better)"));
    }
}
