//! Week-ahead prediction from the final detected segment.

use epiwave_core::PredictionInterval;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{ChangePointError, ChangePointResult, Result, SignalModel};

/// Extrapolates the final-segment model `horizon` days past the sample.
///
/// Interval half-widths come from the final-segment residual variance with
/// Gaussian quantiles (plus the usual regression prediction inflation for the
/// linear model); lower bounds are clipped at zero for count data.
pub fn forecast_cpt(
    result: &ChangePointResult,
    horizon: usize,
    level: f64,
) -> Result<Vec<PredictionInterval>> {
    if horizon < 1 {
        return Err(ChangePointError::InvalidArgument(
            "horizon must be at least 1".into(),
        ));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(ChangePointError::InvalidArgument(format!(
            "level must lie in (0,1), got {level}"
        )));
    }
    let seg = result.final_segment();
    let n = seg.len();
    let needed = match result.model {
        SignalModel::PiecewiseConstant => 1,
        SignalModel::ContinuousPiecewiseLinear => 2,
    };
    if n < needed {
        return Err(ChangePointError::DegenerateFinalSegment(format!(
            "final segment has {n} points, need {needed}"
        )));
    }
    let sigma = result.final_residual_var.sqrt();
    if !sigma.is_finite() {
        return Err(ChangePointError::DegenerateFinalSegment(
            "non-finite residual variance".into(),
        ));
    }

    let z = Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(0.5 + level / 2.0);
    let t_mean = (seg.start + seg.end) as f64 / 2.0;
    let t_ss: f64 = (seg.start..=seg.end)
        .map(|t| (t as f64 - t_mean) * (t as f64 - t_mean))
        .sum();

    let big_t = result.series_len;
    let mut out = Vec::with_capacity(horizon);
    for h in 1..=horizon {
        let t_star = (big_t + h) as f64;
        let point = seg.intercept + seg.slope * t_star;
        let inflation = match result.model {
            SignalModel::PiecewiseConstant => 1.0 + 1.0 / n as f64,
            SignalModel::ContinuousPiecewiseLinear => {
                1.0 + 1.0 / n as f64 + (t_star - t_mean) * (t_star - t_mean) / t_ss
            }
        };
        let half = z * sigma * inflation.sqrt();
        out.push(PredictionInterval::for_counts(
            h,
            point,
            point - half,
            point + half,
            level,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use crate::{isolate_detect_slice, IdConfig, SignalModel};

    use super::*;

    #[test]
    fn constant_final_segment_of_threes_gives_point_three_zero_width() {
        let x = vec![3.0; 40];
        let result =
            isolate_detect_slice(&x, SignalModel::PiecewiseConstant, &IdConfig::default()).unwrap();
        let f = forecast_cpt(&result, 7, 0.95).unwrap();
        assert_eq!(f.len(), 7);
        for pi in &f {
            assert_eq!(pi.point, 3.0);
            assert_eq!(pi.width(), 0.0);
        }
    }

    #[test]
    fn noiseless_declining_line_extrapolates_closed_form() {
        // Slope -1 from value 10 at the end of the sample: day-h forecast is
        // 10 - h by least squares on noiseless data.
        let n = 30usize;
        let x: Vec<f64> = (1..=n).map(|t| 10.0 + (n as f64 - t as f64)).collect();
        let result = isolate_detect_slice(
            &x,
            SignalModel::ContinuousPiecewiseLinear,
            &IdConfig::default(),
        )
        .unwrap();
        assert!(result.locations.is_empty());
        let f = forecast_cpt(&result, 7, 0.95).unwrap();
        for (h, pi) in f.iter().enumerate() {
            let expected = 10.0 - (h as f64 + 1.0);
            assert!(
                (pi.point - expected).abs() < 1e-8,
                "day {}: {} vs {expected}",
                h + 1,
                pi.point
            );
        }
    }

    #[test]
    fn horizon_zero_rejected() {
        let x = vec![3.0; 40];
        let result =
            isolate_detect_slice(&x, SignalModel::PiecewiseConstant, &IdConfig::default()).unwrap();
        assert!(forecast_cpt(&result, 0, 0.95).is_err());
        assert!(forecast_cpt(&result, 3, 1.2).is_err());
    }
}
