//! Serial-interval benchmark estimator with a conjugate Gamma posterior.
//!
//! The serial interval is a Gamma distribution discretized to whole days by
//! interval censoring; the total infectiousness is the convolution of past
//! incidence with those weights, and the posterior over each weekly window
//! is `Gamma(a0 + sum I, b0 + sum Lambda)`.

use epiwave_core::IncidenceSeries;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::estimate::RtEstimate;
use crate::{Result, RtError};

/// Estimator controls; the defaults use a serial interval with mean 6.48
/// days and standard deviation 3.83 over weekly windows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoriOptions {
    pub si_mean: f64,
    pub si_sd: f64,
    /// Window length in days.
    pub window: usize,
    /// Conjugate prior `Gamma(shape, rate)`.
    pub prior_shape: f64,
    pub prior_rate: f64,
}

impl Default for CoriOptions {
    fn default() -> Self {
        Self {
            si_mean: 6.48,
            si_sd: 3.83,
            window: 7,
            prior_shape: 1.0,
            prior_rate: 0.2,
        }
    }
}

/// Weekly output: an estimate or an undefined-window marker.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum WeeklyRt {
    Estimate(RtEstimate),
    /// Total infectiousness was zero across the window.
    Undefined {
        start: chrono::NaiveDate,
        end: chrono::NaiveDate,
    },
}

/// Daily serial-interval weights `w_s = F(s) - F(s-1)`, `s >= 1`, normalized.
pub fn serial_interval_weights(mean: f64, sd: f64) -> Result<Vec<f64>> {
    if mean <= 0.0 || sd <= 0.0 {
        return Err(RtError::InvalidArgument(format!(
            "serial interval needs positive mean and sd, got ({mean}, {sd})"
        )));
    }
    let shape = (mean / sd) * (mean / sd);
    let rate = mean / (sd * sd);
    let dist = Gamma::new(shape, rate).expect("validated parameters");
    let mut weights = Vec::new();
    let mut prev = 0.0;
    for s in 1..512 {
        let cum = dist.cdf(s as f64);
        weights.push(cum - prev);
        prev = cum;
        if 1.0 - cum < 1e-10 {
            break;
        }
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(weights)
}

/// Total infectiousness `Lambda_t = sum_s w_s I_{t-s}` for `t = 1..=T`.
pub fn total_infectiousness(counts: &[u64], weights: &[f64]) -> Vec<f64> {
    (1..=counts.len())
        .map(|t| {
            weights
                .iter()
                .enumerate()
                .take(t - 1)
                .map(|(i, w)| w * counts[t - 2 - i] as f64)
                .sum()
        })
        .collect()
}

/// Weekly conjugate posterior estimates over non-overlapping windows.
pub fn cori_rt(data: &IncidenceSeries, opts: &CoriOptions) -> Result<Vec<WeeklyRt>> {
    if data.len() < opts.window + 2 {
        return Err(RtError::InvalidArgument(format!(
            "need at least window + 2 = {} observations, got {}",
            opts.window + 2,
            data.len()
        )));
    }
    let weights = serial_interval_weights(opts.si_mean, opts.si_sd)?;
    let lambda = total_infectiousness(data.cases(), &weights);

    let mut out = Vec::new();
    let mut start_t = 2usize; // Lambda_1 is always zero by construction
    while start_t + opts.window - 1 <= data.len() {
        let end_t = start_t + opts.window - 1;
        let cases: f64 = data.cases()[start_t - 1..end_t].iter().map(|&c| c as f64).sum();
        let infectiousness: f64 = lambda[start_t - 1..end_t].iter().sum();
        let start = data.date_at(start_t);
        let end = data.date_at(end_t);
        if infectiousness <= 0.0 {
            out.push(WeeklyRt::Undefined { start, end });
        } else {
            out.push(WeeklyRt::Estimate(RtEstimate::from_gamma(
                start,
                end,
                opts.prior_shape + cases,
                opts.prior_rate + infectiousness,
            )));
        }
        start_t += opts.window;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn series(counts: Vec<u64>) -> IncidenceSeries {
        IncidenceSeries::new(NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(), counts, "t").unwrap()
    }

    #[test]
    fn weights_are_a_distribution_with_the_right_mean() {
        let w = serial_interval_weights(6.48, 3.83).unwrap();
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean: f64 = w.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum();
        // Interval censoring shifts the discrete mean up by about half a day.
        assert!((mean - 6.48).abs() < 0.75, "discretized mean {mean}");
    }

    #[test]
    fn constant_incidence_converges_to_one() {
        // After a long run-in the convolution sees the full history, so
        // Lambda ~ I and the posterior concentrates at 1.
        let out = cori_rt(&series(vec![40; 84]), &CoriOptions::default()).unwrap();
        match out.last().unwrap() {
            WeeklyRt::Estimate(e) => {
                assert!((e.median - 1.0).abs() < 0.01, "median {}", e.median);
            }
            WeeklyRt::Undefined { .. } => panic!("expected estimate"),
        }
    }

    #[test]
    fn zero_window_after_burn_in_matches_conjugate_mean() {
        let mut counts = vec![30u64; 21];
        counts.extend(vec![0u64; 15]);
        let opts = CoriOptions::default();
        let out = cori_rt(&series(counts.clone()), &opts).unwrap();
        // Last full window covers days 30..36 (all zero cases).
        let weights = serial_interval_weights(opts.si_mean, opts.si_sd).unwrap();
        let lambda = total_infectiousness(&counts, &weights);
        match out.last().unwrap() {
            WeeklyRt::Estimate(e) => {
                let (shape, rate) = match e.posterior {
                    crate::estimate::RtPosterior::Gamma { shape, rate } => (shape, rate),
                    _ => panic!("gamma posterior expected"),
                };
                assert_eq!(shape, opts.prior_shape); // zero cases in window
                let window_lambda: f64 = lambda[29..36].iter().sum();
                assert!((rate - (opts.prior_rate + window_lambda)).abs() < 1e-12);
                // Posterior mean = a0 / (b0 + sum Lambda).
                let mean = shape / rate;
                assert!(mean < 0.5, "zero-case window should pull the mean down");
            }
            WeeklyRt::Undefined { .. } => panic!("expected estimate"),
        }
    }

    #[test]
    fn undefined_when_no_past_infections() {
        let mut counts = vec![0u64; 14];
        counts.extend(vec![0u64; 7]);
        let out = cori_rt(&series(counts), &CoriOptions::default()).unwrap();
        assert!(matches!(out.first().unwrap(), WeeklyRt::Undefined { .. }));
    }
}
