//! Foreground entity extraction from detection crops and pixel-level IoU
//! between entities.
//!
//! A crop is binarized with an Otsu threshold, dark pixels are taken as
//! foreground by default, and only the largest 8-connected blob survives.
//! Masks are placed in the global image through their anchor box: mask pixel
//! `(r, c)` occupies global cell `(floor(anchor.y) + r, floor(anchor.x) + c)`.

use thiserror::Error;

use crate::geometry::BBox;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaskError {
    #[error("raster must be non-empty, got {width}x{height}")]
    Empty { width: usize, height: usize },
    #[error("expected {expected} pixels for {width}x{height}, got {actual}")]
    PixelCount {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("crop is {width}x{height} but its anchor rounds to {anchor_w}x{anchor_h}")]
    AnchorMismatch {
        width: usize,
        height: usize,
        anchor_w: usize,
        anchor_h: usize,
    },
}

/// Integer raster size that a box covers: each extent rounded, at least 1.
pub fn raster_dims(anchor: &BBox) -> (usize, usize) {
    let round = |v: f64| (v.round() as usize).max(1);
    (round(anchor.w()), round(anchor.h()))
}

/// Grayscale image patch cut from a frame at a detection box.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayCrop {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    anchor: BBox,
}

impl GrayCrop {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<u8>,
        anchor: BBox,
    ) -> Result<Self, MaskError> {
        check_raster(width, height, pixels.len())?;
        let (anchor_w, anchor_h) = raster_dims(&anchor);
        if (anchor_w, anchor_h) != (width, height) {
            return Err(MaskError::AnchorMismatch {
                width,
                height,
                anchor_w,
                anchor_h,
            });
        }
        Ok(GrayCrop {
            width,
            height,
            pixels,
            anchor,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn anchor(&self) -> &BBox {
        &self.anchor
    }

    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &p in &self.pixels {
            hist[p as usize] += 1;
        }
        hist
    }
}

/// Row-major foreground bitmap anchored in global image coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    anchor: BBox,
}

impl BinaryMask {
    pub fn new(
        width: usize,
        height: usize,
        bits: Vec<bool>,
        anchor: BBox,
    ) -> Result<Self, MaskError> {
        check_raster(width, height, bits.len())?;
        Ok(BinaryMask {
            width,
            height,
            bits,
            anchor,
        })
    }

    pub fn empty(width: usize, height: usize, anchor: BBox) -> Result<Self, MaskError> {
        BinaryMask::new(width, height, vec![false; width * height], anchor)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn anchor(&self) -> &BBox {
        &self.anchor
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn foreground_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Global integer cell of the mask's `(0, 0)` pixel as `(row, col)`.
    pub fn origin(&self) -> (i64, i64) {
        (
            self.anchor.y().floor() as i64,
            self.anchor.x().floor() as i64,
        )
    }
}

fn check_raster(width: usize, height: usize, actual: usize) -> Result<(), MaskError> {
    if width == 0 || height == 0 {
        return Err(MaskError::Empty { width, height });
    }
    let expected = width * height;
    if actual != expected {
        return Err(MaskError::PixelCount {
            width,
            height,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Otsu threshold: the level `L` maximizing between-class variance when the
/// classes are `p <= L` and `p > L`. Ties go to the lowest level. A crop with
/// a single intensity returns that intensity.
pub fn otsu_level(crop: &GrayCrop) -> u8 {
    otsu_from_histogram(&crop.histogram())
}

pub fn otsu_from_histogram(hist: &[u64; 256]) -> u8 {
    let occupied: Vec<usize> = (0..256).filter(|&v| hist[v] > 0).collect();
    match occupied.as_slice() {
        [] => return 0,
        [only] => return *only as u8,
        _ => {}
    }

    let total: u64 = hist.iter().sum();
    let total_sum: u128 = hist
        .iter()
        .enumerate()
        .map(|(v, &n)| v as u128 * n as u128)
        .sum();

    // Between-class variance is proportional to (s0*n1 - s1*n0)^2 / (n0*n1).
    // Scores are kept as exact (numerator, denominator) pairs.
    let mut best: Option<(u8, u128, u128)> = None;
    let mut n0: u64 = 0;
    let mut s0: u128 = 0;
    for level in 0..256usize {
        n0 += hist[level];
        s0 += level as u128 * hist[level] as u128;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = total_sum - s0;
        let lhs = s0 * n1 as u128;
        let rhs = s1 * n0 as u128;
        let diff = lhs.abs_diff(rhs);
        let num = diff * diff;
        let den = n0 as u128 * n1 as u128;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => ratio_greater(num, den, bn, bd),
        };
        if better {
            best = Some((level as u8, num, den));
        }
    }
    best.map(|(l, _, _)| l).unwrap_or(occupied[0] as u8)
}

/// `a/b > c/d` for non-negative rationals, exact when the products fit.
fn ratio_greater(a: u128, b: u128, c: u128, d: u128) -> bool {
    match (a.checked_mul(d), c.checked_mul(b)) {
        (Some(l), Some(r)) => l > r,
        _ => (a as f64 / b as f64) > (c as f64 / d as f64),
    }
}

/// Pixelwise threshold. With `foreground_is_dark`, pixels `<= level` are set;
/// otherwise pixels `> level` are set.
pub fn binarize(crop: &GrayCrop, level: u8, foreground_is_dark: bool) -> BinaryMask {
    let bits = crop
        .pixels
        .iter()
        .map(|&p| if foreground_is_dark { p <= level } else { p > level })
        .collect();
    BinaryMask {
        width: crop.width,
        height: crop.height,
        bits,
        anchor: crop.anchor,
    }
}

/// Keeps only the biggest 8-connected foreground component. Equal sizes are
/// resolved in favour of the component whose first pixel in raster order
/// comes first.
pub fn largest_connected_component(mask: &BinaryMask) -> BinaryMask {
    let labels = label_components(mask);
    let mut sizes: Vec<usize> = Vec::new();
    for &l in &labels {
        if l > 0 {
            if sizes.len() < l as usize {
                sizes.resize(l as usize, 0);
            }
            sizes[l as usize - 1] += 1;
        }
    }
    // Labels are numbered in raster order of first appearance, so the first
    // maximum is also the topmost-leftmost one.
    let mut keep = 0u32;
    let mut keep_size = 0usize;
    for (i, &s) in sizes.iter().enumerate() {
        if s > keep_size {
            keep_size = s;
            keep = i as u32 + 1;
        }
    }
    BinaryMask {
        width: mask.width,
        height: mask.height,
        bits: labels.iter().map(|&l| keep > 0 && l == keep).collect(),
        anchor: mask.anchor,
    }
}

/// Two-pass union-find labelling with 8-connectivity. Label 0 is background;
/// components are numbered 1.. in the raster order of their first pixel.
fn label_components(mask: &BinaryMask) -> Vec<u32> {
    let (w, h) = (mask.width, mask.height);
    let mut parent: Vec<usize> = (0..w * h).collect();

    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    fn union(parent: &mut [usize], a: usize, b: usize) {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            // smaller index as root keeps roots at the first raster pixel
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
        }
    }

    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !mask.bits[i] {
                continue;
            }
            // previously visited neighbours: W, NW, N, NE
            if c > 0 && mask.bits[i - 1] {
                union(&mut parent, i, i - 1);
            }
            if r > 0 {
                let up = i - w;
                if mask.bits[up] {
                    union(&mut parent, i, up);
                }
                if c > 0 && mask.bits[up - 1] {
                    union(&mut parent, i, up - 1);
                }
                if c + 1 < w && mask.bits[up + 1] {
                    union(&mut parent, i, up + 1);
                }
            }
        }
    }

    let mut labels = vec![0u32; w * h];
    let mut root_label = vec![0u32; w * h];
    let mut next = 0u32;
    for i in 0..w * h {
        if !mask.bits[i] {
            continue;
        }
        let root = find(&mut parent, i);
        if root_label[root] == 0 {
            next += 1;
            root_label[root] = next;
        }
        labels[i] = root_label[root];
    }
    labels
}

/// Pixel IoU of two masks in global coordinates; 0 when both are empty.
pub fn entity_iou(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let count_a = a.foreground_count();
    let count_b = b.foreground_count();
    let (ar, ac) = a.origin();
    let (br, bc) = b.origin();

    let row_lo = ar.max(br);
    let row_hi = (ar + a.height as i64).min(br + b.height as i64);
    let col_lo = ac.max(bc);
    let col_hi = (ac + a.width as i64).min(bc + b.width as i64);

    let mut inter = 0usize;
    for gr in row_lo..row_hi {
        for gc in col_lo..col_hi {
            let in_a = a.get((gr - ar) as usize, (gc - ac) as usize);
            let in_b = b.get((gr - br) as usize, (gc - bc) as usize);
            if in_a && in_b {
                inter += 1;
            }
        }
    }
    let union = count_a + count_b - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// How a crop is turned into a binary image before component selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinarizeOptions {
    /// Fixed level instead of the per-crop Otsu threshold.
    pub fixed_level: Option<u8>,
    pub foreground_is_dark: bool,
}

impl Default for BinarizeOptions {
    fn default() -> Self {
        BinarizeOptions {
            fixed_level: None,
            foreground_is_dark: true,
        }
    }
}

/// Otsu binarization (dark foreground) followed by largest-component
/// selection.
pub fn extract_entity(crop: &GrayCrop) -> BinaryMask {
    extract_entity_with(crop, BinarizeOptions::default())
}

pub fn extract_entity_with(crop: &GrayCrop, options: BinarizeOptions) -> BinaryMask {
    let level = options.fixed_level.unwrap_or_else(|| otsu_level(crop));
    largest_connected_component(&binarize(crop, level, options.foreground_is_dark))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchor(w: f64, h: f64) -> BBox {
        BBox::new(0.0, 0.0, w, h).unwrap()
    }

    fn crop(width: usize, height: usize, pixels: Vec<u8>) -> GrayCrop {
        GrayCrop::new(width, height, pixels, anchor(width as f64, height as f64)).unwrap()
    }

    fn mask_from_rows(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        let bits = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        BinaryMask::new(w, h, bits, anchor(w as f64, h as f64)).unwrap()
    }

    #[test]
    fn crop_validation() {
        assert!(matches!(
            GrayCrop::new(2, 2, vec![0; 3], anchor(2.0, 2.0)),
            Err(MaskError::PixelCount { .. })
        ));
        assert!(matches!(
            GrayCrop::new(3, 2, vec![0; 6], anchor(2.0, 2.0)),
            Err(MaskError::AnchorMismatch { .. })
        ));
        assert!(GrayCrop::new(2, 2, vec![0; 4], anchor(2.4, 1.6)).is_ok());
        assert!(matches!(
            BinaryMask::new(0, 3, vec![], anchor(1.0, 1.0)),
            Err(MaskError::Empty { .. })
        ));
    }

    #[test]
    fn otsu_constant_and_two_level() {
        assert_eq!(otsu_level(&crop(3, 3, vec![7; 9])), 7);
        let l = otsu_level(&crop(4, 1, vec![10, 200, 10, 200]));
        assert!((10..200).contains(&l));
        // every level in [10, 200) separates equally well; lowest wins
        assert_eq!(l, 10);
        assert_eq!(otsu_level(&crop(6, 1, vec![0, 0, 0, 255, 255, 255])), 0);
    }

    #[test]
    fn binarize_examples() {
        let all = binarize(&crop(2, 2, vec![7; 4]), 7, true);
        assert_eq!(all.foreground_count(), 4);
        let none = binarize(&crop(2, 2, vec![200; 4]), 7, true);
        assert_eq!(none.foreground_count(), 0);
        let m = binarize(&crop(4, 1, vec![10, 200, 10, 200]), 100, true);
        assert_eq!(m.bits(), &[true, false, true, false]);
        let light = binarize(&crop(4, 1, vec![10, 200, 10, 200]), 100, false);
        assert_eq!(light.bits(), &[false, true, false, true]);
    }

    #[test]
    fn largest_component_examples() {
        let single = mask_from_rows(&["....", ".##.", "..#.", "...."]);
        assert_eq!(largest_connected_component(&single), single);

        let grid = mask_from_rows(&[
            "##......",
            ".#......",
            ".##.....",
            "........",
            ".....#..",
            "......#.",
            ".....#..",
            "........",
        ]);
        let want = mask_from_rows(&[
            "##......",
            ".#......",
            ".##.....",
            "........",
            "........",
            "........",
            "........",
            "........",
        ]);
        assert_eq!(largest_connected_component(&grid), want);

        let empty = mask_from_rows(&["...", "..."]);
        assert_eq!(largest_connected_component(&empty), empty);
    }

    #[test]
    fn diagonal_pixels_are_connected() {
        let diag = mask_from_rows(&["#...", ".#..", "..#.", "...#"]);
        assert_eq!(largest_connected_component(&diag), diag);
    }

    #[test]
    fn equal_components_keep_topmost_leftmost() {
        let m = mask_from_rows(&["...##", "#....", "#...."]);
        let want = mask_from_rows(&["...##", ".....", "....."]);
        assert_eq!(largest_connected_component(&m), want);
    }

    #[test]
    fn entity_iou_examples() {
        let full = |x: f64| {
            BinaryMask::new(4, 4, vec![true; 16], BBox::new(x, 0.0, 4.0, 4.0).unwrap()).unwrap()
        };
        assert_eq!(entity_iou(&full(0.0), &full(0.0)), 1.0);
        assert_eq!(entity_iou(&full(0.0), &full(10.0)), 0.0);
        assert!((entity_iou(&full(0.0), &full(2.0)) - 1.0 / 3.0).abs() < 1e-15);
        // sub-pixel anchors are floored
        assert_eq!(entity_iou(&full(0.0), &full(0.9)), 1.0);
        let empty = BinaryMask::empty(4, 4, anchor(4.0, 4.0)).unwrap();
        assert_eq!(entity_iou(&empty, &empty), 0.0);
    }

    #[test]
    fn extract_entity_constant_crop_is_all_foreground() {
        let m = extract_entity(&crop(3, 2, vec![90; 6]));
        assert_eq!(m.foreground_count(), 6);
    }

    #[test]
    fn fixed_level_override() {
        let c = crop(4, 1, vec![10, 60, 10, 200]);
        let opts = BinarizeOptions {
            fixed_level: Some(100),
            foreground_is_dark: true,
        };
        let m = extract_entity_with(&c, opts);
        assert_eq!(m.bits(), &[true, true, true, false]);
    }
}
