//! Fortnightly Bayesian estimation of `(alpha, beta)` under the
//! reported/unreported model, by an independence sampler whose proposal is
//! the prior.
//!
//! For each candidate pair the likelihood runs the model in
//! deterministic-mean mode from an initial condition resampled out of the
//! previous period's end-state cloud, maps reported flux through the
//! discretized Gamma delay, and scores the observed daily counts under
//! independent Gaussians with variance `max(1, y^2 / 4)`.

use epiwave_compartmental::{run_model1_expected_with, DelayModel, Model1Params, SeirState};
use epiwave_core::{IncidenceSeries, RngSeed};
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::effective::effective_r;
use crate::estimate::RtEstimate;
use crate::{Result, RtError};

/// Beta prior on the reporting rate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BetaPrior {
    pub shape1: f64,
    pub shape2: f64,
}

impl BetaPrior {
    pub fn mean(&self) -> f64 {
        self.shape1 / (self.shape1 + self.shape2)
    }

    pub fn variance(&self) -> f64 {
        let s = self.shape1 + self.shape2;
        self.shape1 * self.shape2 / (s * s * (s + 1.0))
    }
}

/// Prior on the transmission rate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum TransmissionPrior {
    /// `Gamma(shape, rate)`; the first-period default puts mass near 2.
    Gamma { shape: f64, rate: f64 },
    /// `Exponential(rate)` for the later, post-spreading periods.
    Exponential { rate: f64 },
}

impl TransmissionPrior {
    pub fn mean(&self) -> f64 {
        match *self {
            TransmissionPrior::Gamma { shape, rate } => shape / rate,
            TransmissionPrior::Exponential { rate } => 1.0 / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            TransmissionPrior::Gamma { shape, rate } => shape / (rate * rate),
            TransmissionPrior::Exponential { rate } => 1.0 / (rate * rate),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            TransmissionPrior::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("validated prior")
                .sample(rng),
            TransmissionPrior::Exponential { rate } => {
                Exp::new(rate).expect("validated prior").sample(rng)
            }
        }
    }
}

/// Priors for one fortnight.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PriorSpec {
    pub alpha: BetaPrior,
    pub beta: TransmissionPrior,
    /// First period only: uniform integer support `{0..=init_max}` on the
    /// exposed and unreported compartments at the analysis start.
    pub init_max: u64,
}

/// Reporting-rate priors progressively skewed towards 1 as testing scales
/// up, with the early wide-transmission prior only in the first period.
pub fn default_prior_schedule(n_periods: usize) -> Vec<PriorSpec> {
    (0..n_periods)
        .map(|p| PriorSpec {
            alpha: match p {
                0 => BetaPrior { shape1: 2.0, shape2: 2.0 },
                1 | 2 => BetaPrior { shape1: 3.0, shape2: 2.0 },
                _ => BetaPrior { shape1: 4.0, shape2: 2.0 },
            },
            beta: if p == 0 {
                TransmissionPrior::Gamma { shape: 1.5, rate: 1.5 }
            } else {
                TransmissionPrior::Exponential { rate: 1.0 }
            },
            init_max: 10,
        })
        .collect()
}

/// Sampler controls; the defaults follow the fitted configuration of the
/// single-population analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcOptions {
    pub n_steps: usize,
    pub burn_in: usize,
    pub population: f64,
    /// Fixed latency `Z`, infectious period `D` and relative
    /// transmissibility `mu`.
    pub latency: f64,
    pub infectious: f64,
    pub mu: f64,
    pub delay_mean: f64,
    pub delay_shape: f64,
    pub period_days: usize,
    /// Overrides the empirical observation variance (an infinite value
    /// makes the likelihood flat).
    pub variance_override: Option<f64>,
    /// Freeze the reporting rate (single-parameter runs).
    pub fixed_alpha: Option<f64>,
    /// Freeze the initial `(exposed, unreported)` seeding.
    pub fixed_init: Option<(f64, f64)>,
}

impl Default for McmcOptions {
    fn default() -> Self {
        Self {
            n_steps: 10_000,
            burn_in: 2_000,
            population: 875_000.0,
            latency: 5.1,
            infectious: 3.5,
            mu: 0.5,
            delay_mean: 6.0,
            delay_shape: 1.85,
            period_days: 14,
            variance_override: None,
            fixed_alpha: None,
            fixed_init: None,
        }
    }
}

/// Posterior summaries plus raw `(alpha, beta)` draws per period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcOutput {
    pub estimates: Vec<RtEstimate>,
    pub alpha_beta: Vec<Vec<(f64, f64)>>,
    pub acceptance_rates: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Carried between periods: an end-of-period compartment state plus the
/// expected recordings already in the reporting pipeline.
#[derive(Debug, Clone)]
struct CloudMember {
    state: SeirState,
    pending: Vec<f64>,
}

/// Runs the sampler over consecutive periods; `priors.len()` sets the
/// number of fortnights, which must fit in the data.
pub fn mcmc_model1(
    data: &IncidenceSeries,
    priors: &[PriorSpec],
    seed: RngSeed,
    opts: &McmcOptions,
) -> Result<McmcOutput> {
    if priors.is_empty() {
        return Err(RtError::Partition("no periods requested".into()));
    }
    if opts.period_days < 2 {
        return Err(RtError::Partition(format!(
            "period length {} is too short",
            opts.period_days
        )));
    }
    let needed = priors.len() * opts.period_days;
    if data.len() < needed {
        return Err(RtError::Partition(format!(
            "{} periods of {} days need {needed} observations, data has {}",
            priors.len(),
            opts.period_days,
            data.len()
        )));
    }
    if opts.burn_in >= opts.n_steps {
        return Err(RtError::InvalidArgument(format!(
            "burn-in {} must be below the step count {}",
            opts.burn_in, opts.n_steps
        )));
    }

    let params_for = |beta: f64, alpha: f64| Model1Params {
        beta,
        mu: opts.mu,
        latency: opts.latency,
        infectious: opts.infectious,
        alpha,
        delay_mean: opts.delay_mean,
        delay_shape: opts.delay_shape,
    };

    let mut estimates = Vec::with_capacity(priors.len());
    let mut all_samples = Vec::with_capacity(priors.len());
    let mut acceptance_rates = Vec::with_capacity(priors.len());
    let mut warnings = Vec::new();
    // Cloud of initial conditions for the *current* period.
    let mut cloud: Vec<CloudMember> = Vec::new();

    for (period, prior) in priors.iter().enumerate() {
        let start_t = period * opts.period_days + 1;
        let end_t = start_t + opts.period_days - 1;
        let observed: Vec<f64> = data.cases()[start_t - 1..end_t]
            .iter()
            .map(|&c| c as f64)
            .collect();
        let sigma2: Vec<f64> = observed
            .iter()
            .map(|&y| match opts.variance_override {
                Some(v) => v,
                None => (y * y / 4.0).max(1.0),
            })
            .collect();

        let period_seed = seed.derive("mcmc-period").derive_index(period as u64);
        let mut rng = period_seed.rng();
        let alpha_dist = Beta::new(prior.alpha.shape1, prior.alpha.shape2)
            .map_err(|e| RtError::InvalidArgument(format!("alpha prior: {e}")))?;

        // Draws an initial condition: period 1 from the seeding prior,
        // later periods from the previous cloud.
        let draw_init = |rng: &mut rand_chacha::ChaCha12Rng| -> CloudMember {
            if period == 0 {
                let (e0, iu0) = match opts.fixed_init {
                    Some(pair) => pair,
                    None => (
                        rng.random_range(0..=prior.init_max) as f64,
                        rng.random_range(0..=prior.init_max) as f64,
                    ),
                };
                CloudMember {
                    state: SeirState::seeded(opts.population, e0, iu0),
                    pending: Vec::new(),
                }
            } else {
                cloud[rng.random_range(0..cloud.len())].clone()
            }
        };

        let spread = DelayModel::new(opts.delay_mean, opts.delay_shape)
            .map_err(RtError::from)?
            .spread();
        let loglik = |alpha: f64, beta: f64, init: &CloudMember| -> Result<(f64, CloudMember)> {
            let run = run_model1_expected_with(
                &params_for(beta, alpha),
                &spread,
                &init.state,
                &init.pending,
                observed.len(),
            )?;
            let mut ll = 0.0;
            for ((y, sim), s2) in observed.iter().zip(&run.recorded).zip(&sigma2) {
                if s2.is_finite() {
                    ll += -(y - sim) * (y - sim) / (2.0 * s2) - 0.5 * (2.0 * std::f64::consts::PI * s2).ln();
                }
            }
            Ok((
                ll,
                CloudMember {
                    state: run.end_state,
                    pending: run.pending_out,
                },
            ))
        };

        // Independence sampler: proposal = prior, so the acceptance ratio
        // reduces to the likelihood ratio.
        let draw_alpha = |rng: &mut rand_chacha::ChaCha12Rng| -> f64 {
            match opts.fixed_alpha {
                Some(a) => a,
                None => alpha_dist.sample(rng),
            }
        };
        let mut current_alpha = draw_alpha(&mut rng);
        let mut current_beta = prior.beta.sample(&mut rng);
        let init = draw_init(&mut rng);
        let (mut current_ll, mut current_end) = loglik(current_alpha, current_beta, &init)?;
        let mut accepted = 0usize;
        let mut kept: Vec<(f64, f64)> = Vec::with_capacity(opts.n_steps - opts.burn_in);
        let mut next_cloud: Vec<CloudMember> = Vec::with_capacity(opts.n_steps - opts.burn_in);

        for step in 0..opts.n_steps {
            let cand_alpha = draw_alpha(&mut rng);
            let cand_beta = prior.beta.sample(&mut rng);
            let cand_init = draw_init(&mut rng);
            let (cand_ll, cand_end) = loglik(cand_alpha, cand_beta, &cand_init)?;
            let log_ratio = cand_ll - current_ll;
            if log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp() {
                current_alpha = cand_alpha;
                current_beta = cand_beta;
                current_ll = cand_ll;
                current_end = cand_end;
                accepted += 1;
            }
            if step >= opts.burn_in {
                kept.push((current_alpha, current_beta));
                next_cloud.push(current_end.clone());
            }
        }

        let rate = accepted as f64 / opts.n_steps as f64;
        if rate < 0.01 {
            warnings.push(format!(
                "period {}: acceptance rate {:.3}% below 1%",
                period + 1,
                rate * 100.0
            ));
        }
        acceptance_rates.push(rate);

        let r_samples: Vec<f64> = kept
            .iter()
            .map(|&(a, b)| effective_r(a, b, opts.mu, opts.infectious))
            .collect();
        let start_date = data.date_at(start_t);
        let end_date = data.date_at(end_t);
        estimates.push(RtEstimate::from_samples(start_date, end_date, r_samples));
        all_samples.push(kept);
        cloud = next_cloud;
    }

    Ok(McmcOutput {
        estimates,
        alpha_beta: all_samples,
        acceptance_rates,
        warnings,
    })
}
