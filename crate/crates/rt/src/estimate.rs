//! Posterior summary type shared by all estimators.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

/// Posterior representation backing an estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum RtPosterior {
    /// Monte Carlo draws.
    Samples(Vec<f64>),
    /// Discrete grid with normalized masses.
    Grid { values: Vec<f64>, masses: Vec<f64> },
    /// Closed-form Gamma posterior (shape, rate).
    Gamma { shape: f64, rate: f64 },
}

/// Per-period posterior summary of the effective reproduction number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RtEstimate {
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
    pub median: f64,
    pub ci95: (f64, f64),
    /// Posterior mass of the event `R_t < 1`.
    pub prob_below_one: f64,
    pub posterior: RtPosterior,
}

impl RtEstimate {
    pub fn from_samples(start: NaiveDate, end: NaiveDate, mut samples: Vec<f64>) -> Self {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted_quantile(&samples, 0.5);
        let ci95 = (sorted_quantile(&samples, 0.025), sorted_quantile(&samples, 0.975));
        let below = samples.iter().filter(|&&r| r < 1.0).count() as f64 / samples.len() as f64;
        Self {
            period_start: start,
            period_end: end,
            median,
            ci95,
            prob_below_one: below,
            posterior: RtPosterior::Samples(samples),
        }
    }

    pub fn from_grid(start: NaiveDate, end: NaiveDate, values: Vec<f64>, masses: Vec<f64>) -> Self {
        let median = grid_quantile(&values, &masses, 0.5);
        let ci95 = (
            grid_quantile(&values, &masses, 0.025),
            grid_quantile(&values, &masses, 0.975),
        );
        let below: f64 = values
            .iter()
            .zip(&masses)
            .filter(|(v, _)| **v < 1.0)
            .map(|(_, m)| m)
            .sum();
        Self {
            period_start: start,
            period_end: end,
            median,
            ci95,
            prob_below_one: below,
            posterior: RtPosterior::Grid { values, masses },
        }
    }

    pub fn from_gamma(start: NaiveDate, end: NaiveDate, shape: f64, rate: f64) -> Self {
        let dist = Gamma::new(shape, rate).expect("positive shape and rate");
        Self {
            period_start: start,
            period_end: end,
            median: dist.inverse_cdf(0.5),
            ci95: (dist.inverse_cdf(0.025), dist.inverse_cdf(0.975)),
            prob_below_one: dist.cdf(1.0),
            posterior: RtPosterior::Gamma { shape, rate },
        }
    }

    /// Recomputes `P(R_t < 1)` from the stored posterior; must equal the
    /// reported field exactly.
    pub fn recompute_prob_below_one(&self) -> f64 {
        match &self.posterior {
            RtPosterior::Samples(samples) => {
                samples.iter().filter(|&&r| r < 1.0).count() as f64 / samples.len() as f64
            }
            RtPosterior::Grid { values, masses } => values
                .iter()
                .zip(masses)
                .filter(|(v, _)| **v < 1.0)
                .map(|(_, m)| m)
                .sum(),
            RtPosterior::Gamma { shape, rate } => Gamma::new(*shape, *rate)
                .expect("positive shape and rate")
                .cdf(1.0),
        }
    }
}

/// Nearest-rank quantile of an ascending slice.
pub(crate) fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

fn grid_quantile(values: &[f64], masses: &[f64], q: f64) -> f64 {
    let mut cum = 0.0;
    for (v, m) in values.iter().zip(masses) {
        cum += m;
        if cum >= q {
            return *v;
        }
    }
    *values.last().unwrap_or(&f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 3, d).unwrap()
    }

    #[test]
    fn sample_summary_is_consistent() {
        let samples: Vec<f64> = (0..1000).map(|i| i as f64 / 500.0).collect(); // 0..2
        let e = RtEstimate::from_samples(day(1), day(14), samples);
        assert!((e.median - 1.0).abs() < 0.01);
        assert!(e.ci95.0 < e.median && e.median < e.ci95.1);
        assert_eq!(e.prob_below_one, e.recompute_prob_below_one());
        assert!((e.prob_below_one - 0.5).abs() < 0.01);
    }

    #[test]
    fn gamma_summary_matches_cdf() {
        let e = RtEstimate::from_gamma(day(1), day(7), 4.0, 4.0);
        assert!((e.recompute_prob_below_one() - e.prob_below_one).abs() < 1e-15);
        assert!(e.ci95.0 <= e.median && e.median <= e.ci95.1);
    }
}
