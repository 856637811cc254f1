use std::path::Path;
use std::process::{Command, Output};

fn shoal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shoal"))
        .args(args)
        .output()
        .expect("run shoal binary")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, config: &str) -> std::path::PathBuf {
    let cfg = dir.join("sim.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("scenario");
    let run = shoal(&["simulate", "--config", p(&cfg), "--output", p(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    out
}

#[test]
fn evaluate_gt_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let scen = simulate(dir.path(), r#"{"scenario": {"n_agents": 4, "n_frames": 30}}"#);
    let gt = scen.join("gt.csv");
    let out = shoal(&["evaluate", "--gt", p(&gt), "--tracks", p(&gt)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for metric in ["MOTA", "IDF1", "IDP ", "IDR "] {
        assert!(text.contains(&format!("{metric:<6}1.000000")), "{metric} in\n{text}");
    }
}

#[test]
fn plot_of_one_track_has_one_polyline() {
    let dir = tempfile::tempdir().unwrap();
    let tracks = dir.path().join("t.csv");
    std::fs::write(&tracks, "1,5,0,0,4,4,1,-1,-1,-1\n2,5,1,0,4,4,1,-1,-1,-1\n3,5,2,0,4,4,0,-1,-1,-1\n").unwrap();
    let svg = dir.path().join("p.svg");
    assert!(shoal(&["plot", "--tracks", p(&tracks), "--output", p(&svg)]).status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("<polyline").count(), 1);
}

#[test]
fn analyze_writes_twenty_bins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"scenario": {"n_agents": 3, "n_frames": 20, "speed": 0.0}}"#).unwrap();
    let hist = dir.path().join("h.csv");
    let out = shoal(&["analyze", "--config", p(&cfg), "--output", p(&hist)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean adjacent IoU 1.000000"));
    let text = std::fs::read_to_string(&hist).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21);
    assert_eq!(lines[20], "0.95,1.00,57");
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    // missing required flag
    assert!(!shoal(&["track", "--output", "x.csv"]).status.success());
    // unreadable file
    let out = shoal(&["plot", "--tracks", "/nonexistent/t.csv", "--output", "x.svg"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/t.csv"));
    // typo in a threshold name
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"tracker": {"tau_mach": 0.4}}"#).unwrap();
    let out = shoal(&["simulate", "--config", p(&cfg), "--output", p(&dir.path().join("s"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field `tau_mach`"));
    // out-of-range value
    std::fs::write(&cfg, r#"{"tracker": {"alpha": 2}}"#).unwrap();
    assert!(!shoal(&["simulate", "--config", p(&cfg), "--output", p(&dir.path().join("s"))]).status.success());
    // unpaired sequences
    let out = shoal(&["evaluate", "--gt", "a.csv", "--gt", "b.csv", "--tracks", "a.csv"]);
    assert!(!out.status.success());
}

#[test]
fn missing_masks_warn_without_aborting() {
    let dir = tempfile::tempdir().unwrap();
    let scen = simulate(
        dir.path(),
        r#"{"scenario": {"n_agents": 2, "n_frames": 120, "arena": {"x": 0, "y": 0, "w": 200, "h": 200}, "crossing_script": [{"agent_a": 0, "agent_b": 1, "frame": 60}]}}"#,
    );
    let tracks = dir.path().join("t.csv");
    let out = shoal(&["track", "--detections", p(&scen.join("det.csv")), "--output", p(&tracks)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no entity mask"));
    assert!(tracks.exists());
}

#[test]
fn ablation_flags_change_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let scen = simulate(dir.path(), r#"{"scenario": {"n_agents": 5, "n_frames": 100, "dropout_p": 0.1, "seed": 4}}"#);
    let run = |extra: &[&str], name: &str| {
        let out = dir.path().join(name);
        let det = scen.join("det.csv");
        let mut args = vec!["track", "--detections", p(&det), "--output", p(&out)];
        args.extend_from_slice(extra);
        assert!(shoal(&args).status.success());
        std::fs::read_to_string(out).unwrap()
    };
    let with = run(&[], "a.csv");
    let without = run(&["--disable-refind"], "b.csv");
    assert_ne!(with, without);
    // refind-off output has no interpolated rows
    assert!(without.lines().all(|l| l.split(',').nth(6) != Some("0.000000")));
    assert!(with.lines().any(|l| l.split(',').nth(6) == Some("0.000000")));
}
