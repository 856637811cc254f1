//! Binary netpbm rasters: PGM (`P5`, 8-bit gray) and PBM (`P4`, 1 = set).

use crate::geometry::BBox;
use crate::masks::{BinaryMask, GrayCrop};

pub struct Raster<T> {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<T>,
}

struct Header<'a> {
    rest: &'a [u8],
    fields: Vec<usize>,
}

fn parse_header<'a>(bytes: &'a [u8], magic: &[u8; 2], count: usize) -> Result<Header<'a>, String> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(format!("missing {} magic", String::from_utf8_lossy(magic)));
    }
    let mut pos = 2;
    let mut fields = Vec::with_capacity(count);
    while fields.len() < count {
        // whitespace and comments between tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err("truncated or malformed header".into());
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        fields.push(text.parse().map_err(|_| format!("header value {text} out of range"))?);
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("header must end with a single whitespace byte".into()),
    }
    Ok(Header {
        rest: &bytes[pos..],
        fields,
    })
}

pub fn read_pgm(bytes: &[u8]) -> Result<Raster<u8>, String> {
    let h = parse_header(bytes, b"P5", 3)?;
    let (width, height, maxval) = (h.fields[0], h.fields[1], h.fields[2]);
    if maxval == 0 || maxval > 255 {
        return Err(format!("maxval {maxval} unsupported (1..=255)"));
    }
    let n = width
        .checked_mul(height)
        .ok_or("image dimensions overflow")?;
    if h.rest.len() < n {
        return Err(format!("expected {n} pixel bytes, found {}", h.rest.len()));
    }
    let pixels = h.rest[..n]
        .iter()
        .map(|&p| if maxval == 255 { p } else { ((u32::from(p.min(maxval as u8)) * 255 + maxval as u32 / 2) / maxval as u32) as u8 })
        .collect();
    Ok(Raster {
        width,
        height,
        pixels,
    })
}

pub fn read_pbm(bytes: &[u8]) -> Result<Raster<bool>, String> {
    let h = parse_header(bytes, b"P4", 2)?;
    let (width, height) = (h.fields[0], h.fields[1]);
    let row_bytes = width.div_ceil(8);
    let n = row_bytes
        .checked_mul(height)
        .ok_or("image dimensions overflow")?;
    if h.rest.len() < n {
        return Err(format!("expected {n} raster bytes, found {}", h.rest.len()));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for r in 0..height {
        let row = &h.rest[r * row_bytes..(r + 1) * row_bytes];
        for c in 0..width {
            pixels.push(row[c / 8] & (0x80 >> (c % 8)) != 0);
        }
    }
    Ok(Raster {
        width,
        height,
        pixels,
    })
}

pub fn write_pgm(crop: &GrayCrop) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", crop.width(), crop.height()).into_bytes();
    out.extend_from_slice(crop.pixels());
    out
}

pub fn write_pbm(mask: &BinaryMask) -> Vec<u8> {
    let (w, h) = (mask.width(), mask.height());
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    let row_bytes = w.div_ceil(8);
    for r in 0..h {
        let mut row = vec![0u8; row_bytes];
        for c in 0..w {
            if mask.get(r, c) {
                row[c / 8] |= 0x80 >> (c % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

impl Raster<u8> {
    pub fn into_crop(self, anchor: BBox) -> Result<GrayCrop, String> {
        GrayCrop::new(self.width, self.height, self.pixels, anchor).map_err(|e| e.to_string())
    }
}

impl Raster<bool> {
    pub fn into_mask(self, anchor: BBox) -> Result<BinaryMask, String> {
        let (aw, ah) = crate::masks::raster_dims(&anchor);
        if (aw, ah) != (self.width, self.height) {
            return Err(format!(
                "mask is {}x{} but its detection box rounds to {aw}x{ah}",
                self.width, self.height
            ));
        }
        BinaryMask::new(self.width, self.height, self.pixels, anchor).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_header_with_comment() {
        let mut bytes = b"P5\n# made by hand\n3 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255]);
        let r = read_pgm(&bytes).unwrap();
        assert_eq!((r.width, r.height), (3, 1));
        assert_eq!(r.pixels, vec![0, 128, 255]);
    }

    #[test]
    fn rescales_small_maxval() {
        let mut bytes = b"P5 2 1 15\n".to_vec();
        bytes.extend_from_slice(&[0, 15]);
        assert_eq!(read_pgm(&bytes).unwrap().pixels, vec![0, 255]);
    }

    #[test]
    fn rejects_truncated_and_wrong_magic() {
        assert!(read_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(read_pbm(b"P5\n2 2\n").is_err());
        assert!(read_pbm(b"P4\n9 1\n\xff").is_err());
    }

    #[test]
    fn pbm_bit_order() {
        let r = read_pbm(b"P4\n9 1\n\x80\x80").unwrap();
        let set: Vec<usize> = (0..9).filter(|&i| r.pixels[i]).collect();
        assert_eq!(set, vec![0, 8]);
    }

    proptest! {
        #[test]
        fn pbm_roundtrip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let bits: Vec<bool> = (0..w * h).map(|i| (seed >> (i % 64)) & 1 == 1 || i % 7 == 0).collect();
            let anchor = BBox::new(0.0, 0.0, w as f64, h as f64).unwrap();
            let mask = BinaryMask::new(w, h, bits.clone(), anchor).unwrap();
            let back = read_pbm(&write_pbm(&mask)).unwrap();
            prop_assert_eq!((back.width, back.height), (w, h));
            prop_assert_eq!(back.pixels, bits);
        }

        #[test]
        fn pgm_roundtrip(w in 1usize..20, h in 1usize..20, pixels in proptest::collection::vec(any::<u8>(), 400)) {
            let anchor = BBox::new(0.0, 0.0, w as f64, h as f64).unwrap();
            let crop = GrayCrop::new(w, h, pixels[..w * h].to_vec(), anchor).unwrap();
            let back = read_pgm(&write_pgm(&crop)).unwrap().into_crop(anchor).unwrap();
            prop_assert_eq!(back, crop);
        }
    }
}
