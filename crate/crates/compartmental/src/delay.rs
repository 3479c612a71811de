//! Gamma reporting delay between infection and recording.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};

use crate::{CompartmentalError, Result};

/// Delay with mean `tau_d` days and shape `a`: `Gamma(a, tau_d / a)`.
#[derive(Debug, Clone, Copy)]
pub struct DelayModel {
    pub mean: f64,
    pub shape: f64,
}

impl DelayModel {
    pub fn new(mean: f64, shape: f64) -> Result<Self> {
        if mean <= 0.0 || shape <= 0.0 {
            return Err(CompartmentalError::InvalidArgument(format!(
                "delay mean and shape must be positive, got ({mean}, {shape})"
            )));
        }
        Ok(Self { mean, shape })
    }

    /// Draws one delay in days.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let dist = Gamma::new(self.shape, self.mean / self.shape).expect("validated parameters");
        dist.sample(rng)
    }

    /// Whole days until recording: the delay rounded up.
    pub fn sample_days<R: Rng>(&self, rng: &mut R) -> usize {
        self.sample(rng).ceil().max(1.0) as usize
    }

    /// Discretized delay distribution `P(ceil(delay) = k)` for `k = 1..`.
    pub fn spread(&self) -> DelaySpread {
        let rate = self.shape / self.mean; // statrs uses shape/rate
        let dist = GammaDist::new(self.shape, rate).expect("validated parameters");
        let mut weights = Vec::new();
        let mut cum_prev = 0.0;
        for k in 1..512 {
            let cum = dist.cdf(k as f64);
            weights.push(cum - cum_prev);
            cum_prev = cum;
            if 1.0 - cum < 1e-12 {
                break;
            }
        }
        DelaySpread { weights }
    }
}

/// Expected fraction of a day's infections recorded `k` days later.
#[derive(Debug, Clone)]
pub struct DelaySpread {
    /// `weights[k-1] = P(recorded k days after infection)`, `k >= 1`.
    pub weights: Vec<f64>,
}

impl DelaySpread {
    /// Adds `flux` infections occurring on day `day` (0-based) into the
    /// expected-recordings buffer.
    pub fn push_expected(&self, buffer: &mut [f64], day: usize, flux: f64) {
        for (k, &w) in self.weights.iter().enumerate() {
            let target = day + k + 1;
            if target < buffer.len() {
                buffer[target] += flux * w;
            }
        }
    }

    /// Total probability mass landing within `days` days.
    pub fn mass_within(&self, days: usize) -> f64 {
        self.weights.iter().take(days).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use epiwave_core::RngSeed;

    #[test]
    fn sampled_delays_have_the_right_mean() {
        let delay = DelayModel::new(6.0, 1.85).unwrap();
        let mut rng = RngSeed::new(3).rng();
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| delay.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 6.0).abs() < 0.1, "empirical mean {mean}");
    }

    #[test]
    fn spread_sums_to_one_and_matches_ceil_mean() {
        let delay = DelayModel::new(6.0, 1.85).unwrap();
        let spread = delay.spread();
        let total: f64 = spread.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        // E[ceil(delay)] is between E[delay] and E[delay] + 1.
        let mean_ceil: f64 = spread
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| (k + 1) as f64 * w)
            .sum();
        assert!(mean_ceil > 6.0 && mean_ceil < 7.0, "{mean_ceil}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(DelayModel::new(0.0, 1.0).is_err());
        assert!(DelayModel::new(6.0, -1.0).is_err());
    }
}
