//! Daily gridded Bayesian filter on the susceptible-infected growth mapping.
//!
//! Day `t` contributes a Poisson likelihood for the count `k_t` with mean
//! `k_{t-1} exp((R - 1) / D)`; the posterior over the grid multiplies the
//! likelihoods of the last `m` days. Days without a positive previous count
//! carry no information about the growth rate and are skipped; windows with
//! no informative day yield an insufficient-signal marker.

use chrono::NaiveDate;
use epiwave_core::IncidenceSeries;
use serde::{Deserialize, Serialize};

use crate::estimate::RtEstimate;
use crate::{Result, RtError};

/// Filter controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BettencourtOptions {
    /// Likelihood memory `m` in days.
    pub window: usize,
    /// Infectious period `D` of the growth mapping.
    pub infectious: f64,
    pub r_max: f64,
    pub grid_step: f64,
}

impl Default for BettencourtOptions {
    fn default() -> Self {
        Self {
            window: 7,
            infectious: 3.5,
            r_max: 8.0,
            grid_step: 0.01,
        }
    }
}

/// Daily output: an estimate or an explicit no-signal marker.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DailyRt {
    Estimate(RtEstimate),
    InsufficientSignal { date: NaiveDate },
}

/// Runs the filter; output starts at day 2 (the first day with a previous
/// count).
pub fn bettencourt_rt(data: &IncidenceSeries, opts: &BettencourtOptions) -> Result<Vec<DailyRt>> {
    if opts.window < 1 {
        return Err(RtError::InvalidArgument("window must be >= 1".into()));
    }
    if opts.r_max < 6.0 {
        return Err(RtError::InvalidArgument(format!(
            "grid must reach at least 6, got r_max {}",
            opts.r_max
        )));
    }
    if data.len() < 2 {
        return Err(RtError::InvalidArgument(
            "need at least two observations".into(),
        ));
    }
    let n_grid = (opts.r_max / opts.grid_step).round() as usize + 1;
    let grid: Vec<f64> = (0..n_grid).map(|i| i as f64 * opts.grid_step).collect();
    let counts = data.cases();

    // Per-day log-likelihood over the grid; None for uninformative days.
    let daily_loglik: Vec<Option<Vec<f64>>> = (2..=data.len())
        .map(|t| {
            let prev = counts[t - 2] as f64;
            let k = counts[t - 1] as f64;
            if prev <= 0.0 {
                return None;
            }
            Some(
                grid.iter()
                    .map(|&r| {
                        let lambda = prev * ((r - 1.0) / opts.infectious).exp();
                        k * lambda.ln() - lambda
                    })
                    .collect(),
            )
        })
        .collect();

    let mut out = Vec::with_capacity(data.len() - 1);
    for t in 2..=data.len() {
        let lo = t.saturating_sub(opts.window - 1).max(2);
        let mut acc = vec![0.0; n_grid];
        let mut informative = 0usize;
        for day in lo..=t {
            if let Some(ll) = &daily_loglik[day - 2] {
                for (a, l) in acc.iter_mut().zip(ll) {
                    *a += l;
                }
                informative += 1;
            }
        }
        let date = data.date_at(t);
        if informative == 0 {
            out.push(DailyRt::InsufficientSignal { date });
            continue;
        }
        let max = acc.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut masses: Vec<f64> = acc.iter().map(|&v| (v - max).exp()).collect();
        let total: f64 = masses.iter().sum();
        for m in masses.iter_mut() {
            *m /= total;
        }
        out.push(DailyRt::Estimate(RtEstimate::from_grid(
            date,
            date,
            grid.clone(),
            masses,
        )));
    }
    Ok(out)
}

/// Grid argmax of the final day's posterior (handy for calibration tests).
pub fn posterior_mode(estimate: &RtEstimate) -> Option<f64> {
    match &estimate.posterior {
        crate::estimate::RtPosterior::Grid { values, masses } => masses
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| values[i]),
        _ => None,
    }
}
