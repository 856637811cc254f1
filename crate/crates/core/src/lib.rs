//! Multi-object tracking by frame-to-frame IoU association.
//!
//! The [`tracker`] links per-frame detections into identities in three
//! stages: unambiguous overlaps are assigned directly, contested overlaps are
//! re-scored with segmented entity masks, and identities that drop out are
//! held in a buffer so they can be re-found nearby within a few frames, with
//! the gap filled by linear interpolation.
//!
//! Supporting modules cover box geometry, mask extraction, optimal
//! assignment, CLEAR-MOT and identity metrics, a synthetic scenario
//! generator and the file formats used by the `shoal` command-line tool.

pub mod assignment;
pub mod detection;
pub mod geometry;
pub mod io;
pub mod masks;
pub mod metrics;
pub mod simulator;
pub mod tracker;
pub mod trajectory;

pub use detection::{Detection, MaskRef, MaskSource, MaskStore};
pub use geometry::BBox;
pub use trajectory::{Frame, TrackId, Trajectory, TrajectoryPoint, TrajectorySet};
