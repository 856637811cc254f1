use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;
use crate::masks::BinarizeOptions;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{name} must lie in {range}, got {value}")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },
    #[error("k must be at least 1")]
    ZeroWindow,
}

/// Whether unmatched detections may start new identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopulationMode {
    /// Identities are created only from the first frame.
    Fixed,
    /// Persistent unmatched detections spawn new identities.
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Minimum score for any association (box IoU, or combined score in the
    /// interaction stage).
    pub tau_match: f64,
    /// Box IoU above which two or more overlaps in a row or column count as
    /// contested.
    pub tau_ambiguous: f64,
    /// Weight of box IoU against entity IoU in the combined score.
    pub alpha: f64,
    /// Refind window in frames, and the buffer radius in box sizes.
    pub k: u32,
    pub population_mode: PopulationMode,
    /// Consecutive unmatched frames before a detection spawns an identity.
    pub spawn_delay: u32,
    /// Visible area. Tracks vanishing within `boundary_margin` box sizes of
    /// its edge are terminated instead of buffered. `None` disables the rule.
    pub arena: Option<BBox>,
    pub boundary_margin: f64,
    pub interaction_enabled: bool,
    pub refind_enabled: bool,
    /// Binarize crops at this level instead of the per-crop Otsu level.
    pub fixed_threshold: Option<u8>,
    pub foreground_is_dark: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            tau_match: 0.3,
            tau_ambiguous: 0.1,
            alpha: 0.5,
            k: 10,
            population_mode: PopulationMode::Open,
            spawn_delay: 1,
            arena: None,
            boundary_margin: 1.0,
            interaction_enabled: true,
            refind_enabled: true,
            fixed_threshold: None,
            foreground_is_dark: true,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let half_open = |name, value: f64| {
            if value > 0.0 && value <= 1.0 {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    name,
                    range: "(0, 1]",
                    value,
                })
            }
        };
        half_open("tau_match", self.tau_match)?;
        half_open("tau_ambiguous", self.tau_ambiguous)?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::OutOfRange {
                name: "alpha",
                range: "[0, 1]",
                value: self.alpha,
            });
        }
        if !(self.boundary_margin.is_finite() && self.boundary_margin >= 0.0) {
            return Err(ConfigError::OutOfRange {
                name: "boundary_margin",
                range: "[0, inf)",
                value: self.boundary_margin,
            });
        }
        if self.k == 0 {
            return Err(ConfigError::ZeroWindow);
        }
        Ok(())
    }

    pub fn binarize_options(&self) -> BinarizeOptions {
        BinarizeOptions {
            fixed_level: self.fixed_threshold,
            foreground_is_dark: self.foreground_is_dark,
        }
    }
}
