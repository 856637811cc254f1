use std::path::Path;

use proptest::prelude::*;
use shoal_core::geometry::iou;
use shoal_core::io::{format_tracks, parse_tracks};
use shoal_core::metrics::{clear_mot, id_metrics, IdMetrics};
use shoal_core::{BBox, TrackId, TrajectoryPoint, TrajectorySet};

/// Small random trajectory sets on a coarse grid so overlaps are frequent.
fn trajectory_set(max_ids: usize) -> impl Strategy<Value = TrajectorySet> {
    prop::collection::vec((0..max_ids as u32, 1u32..6, 0u8..4, 0u8..4), 0..24).prop_map(|rows| {
        let mut set = TrajectorySet::new();
        for (id, frame, gx, gy) in rows {
            let b = BBox::new(f64::from(gx) * 4.0, f64::from(gy) * 4.0, 8.0, 8.0).unwrap();
            set.insert(TrackId(id + 1), frame, TrajectoryPoint::observed(b, 1.0));
        }
        set
    })
}

/// Best total co-located frame count over every injective map from the
/// smaller side into the larger.
fn best_assignment(weights: &[Vec<usize>], rows: usize, cols: usize) -> usize {
    fn go(weights: &[Vec<usize>], r: usize, used: &mut Vec<bool>, transpose: bool) -> usize {
        let (n_rows, n_cols) = if transpose {
            (weights[0].len(), weights.len())
        } else {
            (weights.len(), weights[0].len())
        };
        if r == n_rows {
            return 0;
        }
        // leave this row unmatched
        let mut best = go(weights, r + 1, used, transpose);
        for c in 0..n_cols {
            if !used[c] {
                used[c] = true;
                let w = if transpose { weights[c][r] } else { weights[r][c] };
                best = best.max(w + go(weights, r + 1, used, transpose));
                used[c] = false;
            }
        }
        best
    }
    if rows == 0 || cols == 0 {
        return 0;
    }
    let transpose = rows > cols;
    let mut used = vec![false; rows.max(cols)];
    go(weights, 0, &mut used, transpose)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn id_matching_equals_exhaustive_search(gt in trajectory_set(6), hyp in trajectory_set(6)) {
        let weights: Vec<Vec<usize>> = gt
            .iter()
            .map(|(_, g)| {
                hyp.iter()
                    .map(|(_, h)| {
                        g.iter()
                            .filter(|(f, p)| h.get(*f).is_some_and(|q| iou(&p.bbox, &q.bbox) >= 0.5))
                            .count()
                    })
                    .collect()
            })
            .collect();
        let best = best_assignment(&weights, gt.len(), hyp.len());
        let m = id_metrics(&gt, &hyp, 0.5);
        prop_assert_eq!(m.idtp, best);
        prop_assert_eq!(m.idtp + m.idfn, gt.point_count());
        prop_assert_eq!(m.idtp + m.idfp, hyp.point_count());
    }

    #[test]
    fn idf1_is_the_harmonic_mean(idtp in 0usize..10_000, idfp in 0usize..10_000, idfn in 0usize..10_000) {
        let m = IdMetrics::from_counts(idtp, idfp, idfn);
        if let (Some(p), Some(r), Some(f1)) = (m.idp, m.idr, m.idf1) {
            if p + r > 0.0 {
                prop_assert!((f1 - 2.0 * p * r / (p + r)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn mota_bounds_and_perfection(gt in trajectory_set(5), hyp in trajectory_set(5)) {
        let c = clear_mot(&gt, &hyp, 0.5);
        if let Some(mota) = c.mota {
            prop_assert!(mota <= 1.0);
            let perfect = c.false_negatives + c.false_positives + c.id_switches == 0;
            prop_assert_eq!(mota == 1.0, perfect);
        }
        prop_assert_eq!(c.matches + c.false_negatives, gt.point_count());
        prop_assert_eq!(clear_mot(&gt, &gt, 0.5).mota, (gt.point_count() > 0).then_some(1.0));
    }

    #[test]
    fn metrics_ignore_file_row_order(gt in trajectory_set(5), hyp in trajectory_set(5), seed in any::<u64>()) {
        let shuffle = |set: &TrajectorySet| {
            let mut lines: Vec<&str> = Vec::new();
            let text = format_tracks(set);
            lines.extend(text.lines());
            // deterministic permutation from the seed
            let n = lines.len();
            for i in (1..n).rev() {
                let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 33) as usize % (i + 1);
                lines.swap(i, j);
            }
            parse_tracks(&lines.join("\n"), Path::new("shuffled.csv")).unwrap()
        };
        let (gt2, hyp2) = (shuffle(&gt), shuffle(&hyp));
        prop_assert_eq!(clear_mot(&gt, &hyp, 0.5), clear_mot(&gt2, &hyp2, 0.5));
        prop_assert_eq!(id_metrics(&gt, &hyp, 0.5), id_metrics(&gt2, &hyp2, 0.5));
    }
}
