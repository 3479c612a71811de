//! Change-point estimation for daily incidence series.
//!
//! The detector isolates each change inside an expanding left/right interval
//! schedule before testing it against a threshold, under a signal-plus-noise
//! model whose deterministic part is either piecewise constant or a
//! continuous piecewise-linear spline. Segment refits and week-ahead
//! prediction intervals build on the detected segmentation.

mod contrast;
mod detect;
mod fit;
mod forecast;

use epiwave_core::{IncidenceSeries, PredictionInterval};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contrast::{cusum_contrast, kink_contrast};
pub use detect::{detect_points, Detection};
pub use fit::fit_segments;
pub use forecast::forecast_cpt;

/// Shape of the deterministic signal between change-points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalModel {
    /// Mean jumps at each change-point.
    PiecewiseConstant,
    /// Slope changes at each change-point; the signal stays continuous.
    ContinuousPiecewiseLinear,
}

/// Noise-scale estimator used when the threshold is automatic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SigmaEstimator {
    /// Median absolute deviation of first (constant model) or second
    /// (linear model) differences, scaled to the Gaussian.
    Mad,
    /// Caller-supplied noise standard deviation.
    Explicit(f64),
}

/// Detector configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdConfig {
    /// Interval expansion step in days (`>= 2`).
    pub lambda: usize,
    /// Detection threshold; `None` selects `C * sigma * sqrt(2 ln T)` with
    /// `C = 1.1` (constant) or `C = 1.4` (linear).
    pub threshold: Option<f64>,
    pub sigma: SigmaEstimator,
}

impl Default for IdConfig {
    fn default() -> Self {
        Self {
            lambda: 10,
            threshold: None,
            sigma: SigmaEstimator::Mad,
        }
    }
}

/// Per-segment fit: `value(t) = intercept + slope * t` over `start..=end`
/// (1-based, inclusive). Constant segments carry a zero slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    pub start: usize,
    pub end: usize,
    pub intercept: f64,
    pub slope: f64,
}

impl SegmentFit {
    pub fn value_at(&self, t: usize) -> f64 {
        self.intercept + self.slope * t as f64
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

/// Estimated segmentation of a series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChangePointResult {
    pub model: SignalModel,
    /// Sorted change-point indices `r_1 < .. < r_K` in `[1, T-1]`; segment
    /// `j` covers `r_{j-1}+1 ..= r_j`.
    pub locations: Vec<usize>,
    /// Fitted signal, length `T`.
    pub fitted: Vec<f64>,
    pub segment_params: Vec<SegmentFit>,
    /// Week-ahead forecasts; empty until [`forecast_cpt`] output is attached.
    pub forecasts: Vec<PredictionInterval>,
    /// Detections in the order they were made, with their intervals.
    pub detections: Vec<Detection>,
    /// Threshold actually applied.
    pub threshold: f64,
    /// Residual variance of the final segment (for forecasting).
    pub final_residual_var: f64,
    pub series_len: usize,
}

impl ChangePointResult {
    pub fn final_segment(&self) -> &SegmentFit {
        self.segment_params
            .last()
            .expect("a segmentation always has at least one segment")
    }

    pub fn with_forecasts(mut self, forecasts: Vec<PredictionInterval>) -> Self {
        self.forecasts = forecasts;
        self
    }
}

/// Errors from detection, refitting, or forecasting.
#[derive(Debug, Error)]
pub enum ChangePointError {
    #[error("series of length {len} is too short: need at least {min} points")]
    SeriesTooShort { len: usize, min: usize },

    #[error("non-finite contrast in interval [{lo}, {hi}] (degenerate variance)")]
    NonFiniteContrast { lo: usize, hi: usize },

    #[error("invalid change-point locations: {0}")]
    InvalidLocations(String),

    #[error("degenerate final segment: {0}")]
    DegenerateFinalSegment(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, ChangePointError>;

/// Runs detection and segment refitting over an incidence series.
pub fn isolate_detect(
    series: &IncidenceSeries,
    model: SignalModel,
    cfg: &IdConfig,
) -> Result<ChangePointResult> {
    isolate_detect_slice(&series.cases_f64(), model, cfg)
}

/// Same as [`isolate_detect`] but on a raw signal.
pub fn isolate_detect_slice(
    x: &[f64],
    model: SignalModel,
    cfg: &IdConfig,
) -> Result<ChangePointResult> {
    let (detections, threshold) = detect::detect_points(x, model, cfg)?;
    let mut locations: Vec<usize> = detections.iter().map(|d| d.location).collect();
    locations.sort_unstable();
    let (fitted, segment_params) = fit::fit_segments(x, &locations, model)?;
    let final_residual_var = fit::final_segment_residual_var(x, &segment_params, model);
    Ok(ChangePointResult {
        model,
        locations,
        fitted,
        segment_params,
        forecasts: Vec::new(),
        detections,
        threshold,
        final_residual_var,
        series_len: x.len(),
    })
}
