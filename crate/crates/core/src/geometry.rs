//! Axis-aligned box arithmetic: IoU, refind buffer regions and linear
//! interpolation of missing boxes.
//!
//! Boxes live in continuous pixel coordinates. `(x, y)` is the top-left
//! corner, `(w, h)` the extent, so the right edge is at `x + w`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box extent must be finite and positive, got w={w}, h={h}")]
    Degenerate { w: f64, h: f64 },
    #[error("box origin must be finite, got x={x}, y={y}")]
    NonFinite { x: f64, y: f64 },
    #[error("buffer multiplier k must be at least 1")]
    ZeroMultiplier,
}

/// Axis-aligned rectangle with strictly positive width and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

// all fields are finite, so equality is reflexive
impl Eq for BBox {}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl TryFrom<RawBox> for BBox {
    type Error = GeometryError;

    fn try_from(raw: RawBox) -> Result<Self, Self::Error> {
        BBox::new(raw.x, raw.y, raw.w, raw.h)
    }
}

impl From<BBox> for RawBox {
    fn from(b: BBox) -> Self {
        RawBox { x: b.x, y: b.y, w: b.w, h: b.h }
    }
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(GeometryError::NonFinite { x, y });
        }
        if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
            return Err(GeometryError::Degenerate { w, h });
        }
        Ok(BBox { x, y, w, h })
    }

    /// Box of size `w` x `h` centred on `(cx, cy)`.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        BBox::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Closed-interval membership: points on the boundary are inside.
    pub fn contains(&self, point: (f64, f64)) -> bool {
        let (px, py) = point;
        px >= self.x && px <= self.right() && py >= self.y && py <= self.bottom()
    }

    /// True when `other` lies entirely within `self` (boundaries may touch).
    pub fn contains_box(&self, other: &BBox) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        iou(self, other)
    }
}

/// Intersection over union. Edge- or corner-touching boxes score 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn center(b: &BBox) -> (f64, f64) {
    b.center()
}

pub fn contains(region: &BBox, point: (f64, f64)) -> bool {
    region.contains(point)
}

/// Search region around a reserved track position: same centre, half-extent
/// `k * w` by `k * h`, so the region is `2k` times the box in each dimension.
pub fn buffer_region(center_box: &BBox, k: u32) -> Result<BBox, GeometryError> {
    if k == 0 {
        return Err(GeometryError::ZeroMultiplier);
    }
    let (cx, cy) = center_box.center();
    let k = f64::from(k);
    let half_w = k * center_box.w;
    let half_h = k * center_box.h;
    BBox::new(cx - half_w, cy - half_h, 2.0 * half_w, 2.0 * half_h)
}

/// `n_missing` boxes strictly between `start` and `end`, each component
/// linearly interpolated. Box `i` (1-based) sits at fraction `i / (n + 1)`.
pub fn interpolate_boxes(start: &BBox, end: &BBox, n_missing: usize) -> Vec<BBox> {
    let steps = (n_missing + 1) as f64;
    (1..=n_missing)
        .map(|i| {
            let t = i as f64 / steps;
            let lerp = |a: f64, b: f64| a + (b - a) * t;
            BBox {
                x: lerp(start.x, end.x),
                y: lerp(start.y, end.y),
                // convex combination of two positive extents stays positive
                w: lerp(start.w, end.w),
                h: lerp(start.h, end.h),
            }
        })
        .collect()
}
