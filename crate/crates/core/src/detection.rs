//! Detector output and the lookup of per-detection entity images.

use std::collections::BTreeMap;

use crate::geometry::BBox;
use crate::masks::{extract_entity_with, BinarizeOptions, BinaryMask, GrayCrop};
use crate::trajectory::Frame;

/// Key of an entity image: the detection's frame and its position within
/// that frame's detection list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MaskRef {
    pub frame: Frame,
    pub det_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: Frame,
    pub bbox: BBox,
    pub confidence: f64,
    pub mask_ref: Option<MaskRef>,
}

impl Detection {
    pub fn new(frame: Frame, bbox: BBox, confidence: f64) -> Self {
        Detection {
            frame,
            bbox,
            confidence,
            mask_ref: None,
        }
    }

    pub fn with_mask(mut self, mask_ref: MaskRef) -> Self {
        self.mask_ref = Some(mask_ref);
        self
    }
}

/// What a mask reference resolves to: a raw crop still to be segmented, or
/// an already segmented mask.
#[derive(Debug, Clone, PartialEq)]
pub enum EntityImage {
    Crop(GrayCrop),
    Mask(BinaryMask),
}

impl EntityImage {
    pub fn to_mask(&self, options: BinarizeOptions) -> BinaryMask {
        match self {
            EntityImage::Crop(crop) => extract_entity_with(crop, options),
            EntityImage::Mask(mask) => mask.clone(),
        }
    }
}

pub trait MaskSource {
    fn resolve(&self, key: &MaskRef) -> Option<&EntityImage>;

    fn entity(&self, key: &MaskRef, options: BinarizeOptions) -> Option<BinaryMask> {
        self.resolve(key).map(|img| img.to_mask(options))
    }
}

/// A source with no masks at all.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoMasks;

impl MaskSource for NoMasks {
    fn resolve(&self, _key: &MaskRef) -> Option<&EntityImage> {
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaskStore {
    images: BTreeMap<MaskRef, EntityImage>,
}

impl MaskStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: MaskRef, image: EntityImage) -> Option<EntityImage> {
        self.images.insert(key, image)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MaskRef, &EntityImage)> + '_ {
        self.images.iter()
    }

    pub fn contains(&self, key: &MaskRef) -> bool {
        self.images.contains_key(key)
    }
}

impl MaskSource for MaskStore {
    fn resolve(&self, key: &MaskRef) -> Option<&EntityImage> {
        self.images.get(key)
    }
}
