//! JSON configuration with `tracker`, `scenario` and `metrics` sections.
//! Unknown keys are rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::{read_text, IoError};
use crate::metrics::DEFAULT_IOU_GATE;
use crate::simulator::ScenarioConfig;
use crate::tracker::TrackerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub iou_gate: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            iou_gate: DEFAULT_IOU_GATE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub tracker: TrackerConfig,
    pub scenario: ScenarioConfig,
    pub metrics: MetricsConfig,
}

/// Parses and range-checks a configuration. `path` only labels diagnostics.
pub fn parse_config(text: &str, path: &Path) -> Result<AppConfig, IoError> {
    let config: AppConfig = serde_json::from_str(text)
        .map_err(|e| IoError::parse(path, e.line(), e.to_string()))?;
    config
        .tracker
        .validate()
        .map_err(|e| IoError::invalid(path, format!("tracker: {e}")))?;
    config
        .scenario
        .validate()
        .map_err(|e| IoError::invalid(path, format!("scenario: {e}")))?;
    if !(0.0..=1.0).contains(&config.metrics.iou_gate) {
        return Err(IoError::invalid(
            path,
            format!("metrics: iou_gate must lie in [0, 1], got {}", config.metrics.iou_gate),
        ));
    }
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<AppConfig, IoError> {
    parse_config(&read_text(path)?, path)
}
