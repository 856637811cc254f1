use std::path::Path;

use proptest::prelude::*;
use shoal_core::detection::{EntityImage, MaskSource};
use shoal_core::io::{load_masks, parse_tracks, read_detections, read_tracks, write_scenario, write_tracks, IoError};
use shoal_core::simulator::{generate, ScenarioConfig};
use shoal_core::tracker::{track_sequence, TrackerConfig};
use shoal_core::{BBox, TrackId, TrajectoryPoint, TrajectorySet};

fn point() -> impl Strategy<Value = TrajectoryPoint> {
    (-1e4f64..1e4, -1e4f64..1e4, 0.01f64..500.0, 0.01f64..500.0, 0.0f64..=1.0, any::<bool>()).prop_map(
        |(x, y, w, h, conf, interp)| {
            let b = BBox::new(x, y, w, h).unwrap();
            if interp || conf < 1e-6 {
                TrajectoryPoint::interpolated(b)
            } else {
                TrajectoryPoint::observed(b, conf)
            }
        },
    )
}

proptest! {
    #[test]
    fn track_files_roundtrip_to_six_decimals(
        rows in prop::collection::btree_map((1u32..50, 1u32..2000), point(), 0..40)
    ) {
        let mut set = TrajectorySet::new();
        for ((id, frame), p) in &rows {
            set.insert(TrackId(*id), *frame, *p);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_tracks(&path, &set).unwrap();
        let back = read_tracks(&path).unwrap();
        prop_assert_eq!(back.point_count(), set.point_count());
        for ((id, frame), p) in &rows {
            let q = back.get(TrackId(*id)).unwrap().get(*frame).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-6;
            prop_assert!(close(q.bbox.x(), p.bbox.x()) && close(q.bbox.y(), p.bbox.y()));
            prop_assert!(close(q.bbox.w(), p.bbox.w()) && close(q.bbox.h(), p.bbox.h()));
            prop_assert_eq!(q.interpolated, p.interpolated);
            prop_assert!(close(q.confidence, p.confidence));
        }
    }
}

#[test]
fn malformed_track_line_reports_file_and_line() {
    let err = parse_tracks("1,1,0,0,1,1,1,-1,-1,-1\n\n1,2,0,0,1,oops,1,-1,-1,-1\n", Path::new("hyp.csv")).unwrap_err();
    assert!(matches!(err, IoError::Parse { line: 3, .. }));
    let text = err.to_string();
    assert!(text.starts_with("hyp.csv:3:") && text.contains("bb_height"), "{text}");
}

#[test]
fn written_scenario_tracks_like_the_in_memory_one() {
    let s = generate(&ScenarioConfig {
        n_agents: 6,
        n_frames: 80,
        jitter_sigma: 0.7,
        dropout_p: 0.05,
        seed: 9,
        ..ScenarioConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_scenario(dir.path(), &s).unwrap();

    let mut frames = read_detections(&dir.path().join("det.csv")).unwrap();
    let masks = load_masks(&dir.path().join("masks.csv"), &mut frames).unwrap();
    assert_eq!(masks.len(), s.masks.len());
    for (key, image) in s.masks.iter() {
        let (EntityImage::Mask(a), Some(EntityImage::Mask(b))) = (image, masks.resolve(key)) else {
            panic!("mask {key:?} missing");
        };
        assert_eq!(a.bits(), b.bits());
        assert_eq!(a.origin(), b.origin());
    }
    let gt = read_tracks(&dir.path().join("gt.csv")).unwrap();
    assert_eq!(gt.point_count(), s.gt.point_count());

    let from_files = track_sequence(&frames, &masks, TrackerConfig::default()).unwrap();
    let in_memory = track_sequence(&s.detections, &s.masks, TrackerConfig::default()).unwrap();
    assert_eq!(from_files.trajectories, in_memory.trajectories);
}

#[test]
fn manifest_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det.csv");
    std::fs::write(&det, "1,-1,0,0,4,3,1,-1,-1,-1\n").unwrap();
    let manifest = dir.path().join("m.csv");

    std::fs::write(&manifest, "1,0,missing.pbm\n").unwrap();
    let mut frames = read_detections(&det).unwrap();
    assert!(matches!(load_masks(&manifest, &mut frames), Err(IoError::Io { .. })));

    std::fs::write(&manifest, "1,5,a.pbm\n").unwrap();
    assert!(load_masks(&manifest, &mut frames).is_err());

    // raster size must match the detection box
    std::fs::write(dir.path().join("a.pbm"), b"P4\n3 3\n\0\0\0").unwrap();
    std::fs::write(&manifest, "1,0,a.pbm\n").unwrap();
    let err = load_masks(&manifest, &mut frames).unwrap_err();
    assert!(err.to_string().contains("rounds to 4x3"), "{err}");

    std::fs::write(dir.path().join("a.pbm"), b"P4\n4 3\n\xf0\0\0").unwrap();
    let store = load_masks(&manifest, &mut frames).unwrap();
    assert_eq!(store.len(), 1);
    assert!(frames[&1][0].mask_ref.is_some());
}
