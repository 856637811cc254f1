//! Standalone SVG of box-centre trajectories, one coloured polyline per id.

use std::fmt::Write as _;

use crate::trajectory::{TrackId, TrajectorySet};

const MARGIN: f64 = 10.0;

/// Hue stepped by the golden angle so neighbouring ids stay distinct.
pub fn track_color(id: TrackId) -> String {
    let hue = (f64::from(id.0) * 137.507_764).rem_euclid(360.0);
    format!("hsl({hue:.1},70%,45%)")
}

pub fn render_svg(set: &TrajectorySet) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (_, t) in set.iter() {
        for (_, p) in t.iter() {
            let (cx, cy) = p.bbox.center();
            x0 = x0.min(cx);
            y0 = y0.min(cy);
            x1 = x1.max(cx);
            y1 = y1.max(cy);
        }
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (0.0, 0.0, 0.0, 0.0);
    }
    let (w, h) = (x1 - x0 + 2.0 * MARGIN, y1 - y0 + 2.0 * MARGIN);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.3} {:.3} {w:.3} {h:.3}" width="{w:.0}" height="{h:.0}">"#,
        x0 - MARGIN,
        y0 - MARGIN
    );
    let _ = writeln!(out, r#"<rect x="{:.3}" y="{:.3}" width="{w:.3}" height="{h:.3}" fill="white"/>"#, x0 - MARGIN, y0 - MARGIN);
    for (id, t) in set.iter() {
        let points: Vec<String> = t
            .iter()
            .map(|(_, p)| {
                let (cx, cy) = p.bbox.center();
                format!("{cx:.3},{cy:.3}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline data-id="{id}" fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>{id}</title></polyline>"#,
            track_color(id),
            points.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}
