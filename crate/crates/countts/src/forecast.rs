//! Simulation-based forecasting with simultaneous prediction intervals.

use epiwave_core::{IncidenceSeries, PredictionInterval, RngSeed};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::fit::FitReport;
use crate::model::{filter_intensity, LogLinCountModel};
use crate::{CountTsError, Result};

/// Simulates one forward path of `horizon` daily counts.
///
/// `last_nu` and `last_count` describe the state at the end of the sample of
/// length `t_last`; intervention effects keep acting on absolute time.
pub fn simulate_path<R: Rng>(
    model: &LogLinCountModel,
    last_nu: f64,
    last_count: u64,
    t_last: usize,
    horizon: usize,
    rng: &mut R,
) -> Vec<u64> {
    let mut nu_prev = last_nu;
    let mut z_prev = ((last_count as f64) + 1.0).ln();
    let mut out = Vec::with_capacity(horizon);
    for h in 1..=horizon {
        let nu = model.intercept
            + model.feedback * nu_prev
            + model.obs_coeff * z_prev
            + model.intervention_effect(t_last + h);
        let lambda = nu.min(500.0).exp();
        let draw = sample_poisson(lambda, rng);
        out.push(draw);
        nu_prev = nu;
        z_prev = ((draw as f64) + 1.0).ln();
    }
    out
}

/// Simulates a whole series from scratch under the model's recursion,
/// starting from `nu_0` (which also stands in for the pre-sample
/// log-observation, as in fitting).
pub fn simulate_series(model: &LogLinCountModel, t_max: usize, seed: RngSeed) -> Vec<u64> {
    let mut rng = seed.rng();
    let mut nu_prev = model.nu0;
    let mut z_prev = model.nu0;
    let mut out = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        let nu = model.intercept
            + model.feedback * nu_prev
            + model.obs_coeff * z_prev
            + model.intervention_effect(t);
        let draw = sample_poisson(nu.min(500.0).exp(), &mut rng);
        out.push(draw);
        nu_prev = nu;
        z_prev = ((draw as f64) + 1.0).ln();
    }
    out
}

pub(crate) fn sample_poisson<R: Rng>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(lambda.min(1e12)).expect("positive finite Poisson mean");
    dist.sample(rng) as u64
}

/// Simulates all forecast paths; row `i` is the path for derived seed `i`.
pub fn forecast_paths(
    report: &FitReport,
    series: &IncidenceSeries,
    horizon: usize,
    seed: RngSeed,
    n_paths: usize,
) -> Result<Vec<Vec<u64>>> {
    let counts = series.cases();
    let nu = filter_intensity(&report.model, counts)?;
    let last_nu = *nu.last().expect("series is never empty");
    let last_count = *counts.last().unwrap();
    let t_last = counts.len();
    let path_seed = seed.derive("countts-forecast");
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_seed.derive_index(i as u64).rng();
            simulate_path(&report.model, last_nu, last_count, t_last, horizon, &mut rng)
        })
        .collect())
}

/// Simultaneous prediction intervals from simulated paths.
///
/// The band is the widest symmetric order-statistic envelope whose empirical
/// whole-path coverage still reaches `level`; the point forecast is the
/// pathwise mean.
pub fn predict_counts(
    report: &FitReport,
    series: &IncidenceSeries,
    horizon: usize,
    level: f64,
    seed: RngSeed,
    n_paths: usize,
) -> Result<Vec<PredictionInterval>> {
    if horizon < 1 {
        return Err(CountTsError::InvalidArgument("horizon must be >= 1".into()));
    }
    if n_paths < 1000 {
        return Err(CountTsError::InvalidArgument(format!(
            "need at least 1000 paths for calibrated intervals, got {n_paths}"
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(CountTsError::InvalidArgument(format!(
            "level must lie in (0,1), got {level}"
        )));
    }
    let paths = forecast_paths(report, series, horizon, seed, n_paths)?;
    Ok(simultaneous_band(&paths, horizon, level))
}

pub(crate) fn simultaneous_band(
    paths: &[Vec<u64>],
    horizon: usize,
    level: f64,
) -> Vec<PredictionInterval> {
    let n = paths.len();
    let mut sorted: Vec<Vec<u64>> = (0..horizon)
        .map(|h| {
            let mut col: Vec<u64> = paths.iter().map(|p| p[h]).collect();
            col.sort_unstable();
            col
        })
        .collect();

    // coverage(k) is non-increasing in the trimming depth k; binary-search
    // the deepest k that still covers whole paths at the requested level.
    let coverage = |k: usize| -> f64 {
        let inside = paths
            .iter()
            .filter(|p| {
                (0..horizon).all(|h| {
                    let lo = sorted[h][k];
                    let hi = sorted[h][n - 1 - k];
                    lo <= p[h] && p[h] <= hi
                })
            })
            .count();
        inside as f64 / n as f64
    };
    let (mut lo_k, mut hi_k) = (0usize, (n - 1) / 2);
    if coverage(hi_k) >= level {
        lo_k = hi_k;
    } else {
        while hi_k - lo_k > 1 {
            let mid = (lo_k + hi_k) / 2;
            if coverage(mid) >= level {
                lo_k = mid;
            } else {
                hi_k = mid;
            }
        }
    }
    let k = lo_k;

    let means: Vec<f64> = (0..horizon)
        .map(|h| paths.iter().map(|p| p[h] as f64).sum::<f64>() / n as f64)
        .collect();
    (0..horizon)
        .map(|h| {
            let band = PredictionInterval::for_counts(
                h + 1,
                means[h],
                sorted[h][k] as f64,
                sorted[h][n - 1 - k] as f64,
                level,
            );
            sorted[h].shrink_to_fit();
            band
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn series(counts: Vec<u64>) -> IncidenceSeries {
        IncidenceSeries::new(
            NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(),
            counts,
            "test",
        )
        .unwrap()
    }

    fn constant_rate_report(rate: f64, counts: &[u64]) -> FitReport {
        let model = LogLinCountModel::new(rate.ln(), 0.0, 0.0, rate.ln()).unwrap();
        FitReport {
            fitted_means: vec![rate; counts.len()],
            model,
            std_errors: vec![],
            loglik: 0.0,
            bic: 0.0,
            converged: true,
            boundary: false,
            n_obs: counts.len(),
            n_params: 1,
        }
    }

    #[test]
    fn constant_intensity_forecasts_the_rate() {
        let s = series(vec![5; 40]);
        let report = constant_rate_report(5.0, s.cases());
        let f = predict_counts(&report, &s, 7, 0.95, RngSeed::new(11), 4000).unwrap();
        for pi in &f {
            assert!((pi.point - 5.0).abs() < 0.15, "point {}", pi.point);
            assert!(pi.lower <= 5.0 && 5.0 <= pi.upper);
        }
    }

    #[test]
    fn simultaneous_band_contains_pointwise_band() {
        let s = series(vec![3; 30]);
        let report = constant_rate_report(3.0, s.cases());
        let seed = RngSeed::new(5);
        let paths = forecast_paths(&report, &s, 7, seed, 4000).unwrap();
        let simultaneous = simultaneous_band(&paths, 7, 0.95);
        // Pointwise 95% band per horizon from the same paths.
        for (h, pi) in simultaneous.iter().enumerate() {
            let mut col: Vec<u64> = paths.iter().map(|p| p[h]).collect();
            col.sort_unstable();
            let lo = col[(0.025 * col.len() as f64) as usize] as f64;
            let hi = col[((0.975 * col.len() as f64) as usize).min(col.len() - 1)] as f64;
            assert!(pi.lower <= lo, "h={h}: {} > {lo}", pi.lower);
            assert!(pi.upper >= hi, "h={h}: {} < {hi}", pi.upper);
        }
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let s = series(vec![4; 25]);
        let report = constant_rate_report(4.0, s.cases());
        let a = predict_counts(&report, &s, 5, 0.9, RngSeed::new(7), 2000).unwrap();
        let b = predict_counts(&report, &s, 5, 0.9, RngSeed::new(7), 2000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn preconditions_are_enforced() {
        let s = series(vec![4; 25]);
        let report = constant_rate_report(4.0, s.cases());
        assert!(predict_counts(&report, &s, 0, 0.9, RngSeed::new(7), 2000).is_err());
        assert!(predict_counts(&report, &s, 3, 0.9, RngSeed::new(7), 10).is_err());
    }
}
