//! Forecast interval type shared by all predicting modules.

use serde::{Deserialize, Serialize};

/// Point forecast with a symmetric-coverage interval for one horizon day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    /// Days ahead of the last observation (1 = next day).
    pub horizon_day: usize,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    /// Nominal coverage level in (0, 1).
    pub level: f64,
}

impl PredictionInterval {
    /// Builds an interval, clipping the lower bound (and, if needed, the
    /// point) at zero for count targets.
    pub fn for_counts(horizon_day: usize, point: f64, lower: f64, upper: f64, level: f64) -> Self {
        let lower = lower.max(0.0);
        let point = point.max(lower);
        let upper = upper.max(point);
        Self {
            horizon_day,
            point,
            lower,
            upper,
            level,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}
