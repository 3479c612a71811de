//! Weekly reproduction-number estimation by ensemble adjustment over the
//! five-district metapopulation model.
//!
//! Each ensemble member carries the full compartment state plus the six
//! epidemiological parameters. Days cycle forecast-then-adjust: the
//! stochastic metapopulation step plus a sampled Gamma reporting delay
//! produce each member's predicted confirmations per district, and every
//! district observation is assimilated in turn with the deterministic
//! ensemble adjustment update under variance `max(1, y^2/4)`. Members may
//! drift outside their initial prior ranges; only physical bounds apply.

use chrono::NaiveDate;
use epiwave_compartmental::{step_model2, MetaParams, MetaState, Model1Params, Model2Rngs, SeirState};
use epiwave_core::{IncidenceSeries, MobilityMatrix, RngSeed};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::effective::effective_r;
use crate::estimate::RtEstimate;
use crate::{Result, RtError};

/// Ensemble setup: member count and uniform initialization ranges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_members: usize,
    pub mu_range: (f64, f64),
    pub theta_range: (f64, f64),
    pub latency_range: (f64, f64),
    pub infectious_range: (f64, f64),
    /// Transmission-rate range before the lockdown date.
    pub beta_pre: (f64, f64),
    /// Range re-drawn at the lockdown date.
    pub beta_post: (f64, f64),
    pub alpha_range: (f64, f64),
    /// Multiplicative parameter-anomaly inflation per cycle.
    pub inflation: f64,
    pub delay_mean: f64,
    pub delay_shape: f64,
    /// Undocumented seeding: `E`, `I_u` uniform on this range per district,
    /// one week before the first documented case.
    pub seed_range: (f64, f64),
    pub seed_lead_days: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_members: 300,
            mu_range: (0.2, 1.0),
            theta_range: (1.0, 1.75),
            latency_range: (3.5, 5.5),
            infectious_range: (3.0, 4.0),
            beta_pre: (0.1, 1.5),
            beta_post: (0.0, 0.8),
            alpha_range: (0.3, 1.0),
            inflation: 1.01,
            delay_mean: 6.0,
            delay_shape: 1.85,
            seed_range: (0.0, 5.0),
            seed_lead_days: 7,
        }
    }
}

/// Weekly estimates plus runtime warnings (collapse, skipped updates).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EakfOutput {
    pub weekly: Vec<RtEstimate>,
    pub warnings: Vec<String>,
}

/// Deterministic scalar ensemble adjustment.
///
/// Returns the per-member increments of the observed variable together with
/// the posterior mean and variance. An infinite observation variance leaves
/// the ensemble untouched (zero Kalman gain).
pub fn eakf_scalar_update(z: &[f64], obs: f64, obs_var: f64) -> (Vec<f64>, f64, f64) {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !obs_var.is_finite() {
        return (vec![0.0; z.len()], mean, var);
    }
    let post_var = 1.0 / (1.0 / var + 1.0 / obs_var);
    let post_mean = post_var * (mean / var + obs / obs_var);
    let shrink = (post_var / var).sqrt();
    let dz = z
        .iter()
        .map(|&v| post_mean + shrink * (v - mean) - v)
        .collect();
    (dz, post_mean, post_var)
}

struct Member {
    meta: MetaState,
    beta: f64,
    mu: f64,
    theta: f64,
    latency: f64,
    infectious: f64,
    alpha: f64,
    /// Per-district ring of scheduled confirmations; index 0 is today.
    pending: Vec<Vec<f64>>,
    rngs: Model2Rngs,
    delay_rng: rand_chacha::ChaCha12Rng,
}

impl Member {
    fn param_vec(&self) -> [f64; 6] {
        [
            self.beta,
            self.mu,
            self.theta,
            self.latency,
            self.infectious,
            self.alpha,
        ]
    }

    fn meta_params(&self, mobility: &MobilityMatrix) -> MetaParams {
        MetaParams {
            epi: Model1Params {
                beta: self.beta.max(1e-9),
                mu: self.mu,
                latency: self.latency,
                infectious: self.infectious,
                alpha: self.alpha,
                delay_mean: 6.0,
                delay_shape: 1.85,
            },
            theta: self.theta,
            mobility: mobility.clone(),
        }
    }
}

const PENDING_DAYS: usize = 64;

/// Physical (not prior) bounds per parameter: beta, mu, theta, latency,
/// infectious period, alpha.
const PARAM_BOUNDS: [(f64, f64); 6] = [
    (0.0, 3.0),
    (0.01, 1.0),
    (0.0, 3.0),
    (1.0, 14.0),
    (1.0, 14.0),
    (0.05, 1.0),
];

/// Runs the weekly assimilation over per-district daily incidence.
pub fn eakf_model2(
    district_data: &[IncidenceSeries],
    populations: &[f64],
    mobility: &MobilityMatrix,
    lockdown: NaiveDate,
    cfg: &EnsembleConfig,
    seed: RngSeed,
) -> Result<EakfOutput> {
    let n_districts = district_data.len();
    if n_districts == 0 || populations.len() != n_districts || mobility.len() != n_districts {
        return Err(RtError::InvalidArgument(format!(
            "need matching districts: {} series, {} populations, {}x{} mobility",
            n_districts,
            populations.len(),
            mobility.len(),
            mobility.len()
        )));
    }
    if cfg.n_members < 100 {
        return Err(RtError::InvalidArgument(format!(
            "ensemble needs at least 100 members, got {}",
            cfg.n_members
        )));
    }
    let t_len = district_data[0].len();
    let start_date = district_data[0].start_date();
    for s in district_data {
        if s.len() != t_len || s.start_date() != start_date {
            return Err(RtError::InvalidArgument(
                "district series must share start date and length".into(),
            ));
        }
    }

    // Analysis starts one week before the first documented case anywhere.
    let first_case = district_data
        .iter()
        .filter_map(|s| s.first_case_index())
        .min()
        .ok_or_else(|| RtError::InvalidArgument("no cases in any district".into()))?;
    let start_t = first_case.saturating_sub(cfg.seed_lead_days).max(1);

    let names: Vec<String> = mobility.districts().to_vec();
    let mut warnings = Vec::new();

    // Initialize members.
    let init_seed = seed.derive("eakf-init");
    let member_seed = seed.derive("eakf-member");
    let mut members: Vec<Member> = (0..cfg.n_members)
        .map(|m| {
            let mut rng = init_seed.derive_index(m as u64).rng();
            let districts: Vec<SeirState> = populations
                .iter()
                .map(|&n| {
                    let e = rng.random_range(cfg.seed_range.0..=cfg.seed_range.1);
                    let iu = rng.random_range(cfg.seed_range.0..=cfg.seed_range.1);
                    SeirState::seeded(n, e, iu)
                })
                .collect();
            Member {
                meta: MetaState::new(districts, names.clone()).expect("validated districts"),
                beta: rng.random_range(cfg.beta_pre.0..=cfg.beta_pre.1),
                mu: rng.random_range(cfg.mu_range.0..=cfg.mu_range.1),
                theta: rng.random_range(cfg.theta_range.0..=cfg.theta_range.1),
                latency: rng.random_range(cfg.latency_range.0..=cfg.latency_range.1),
                infectious: rng.random_range(cfg.infectious_range.0..=cfg.infectious_range.1),
                alpha: rng.random_range(cfg.alpha_range.0..=cfg.alpha_range.1),
                pending: vec![vec![0.0; PENDING_DAYS]; n_districts],
                rngs: Model2Rngs::from_seed(member_seed.derive_index(m as u64), n_districts),
                delay_rng: member_seed
                    .derive_index(m as u64)
                    .derive("delay")
                    .rng(),
            }
        })
        .collect();

    let delay = epiwave_compartmental::DelayModel::new(cfg.delay_mean, cfg.delay_shape)
        .map_err(RtError::from)?;

    let mut weekly = Vec::new();
    let mut week_days = 0usize;
    let mut week_start = None::<NaiveDate>;
    let mut beta_redrawn = false;
    let mut redraw_rng = seed.derive("eakf-lockdown").rng();

    for t in start_t..=t_len {
        let today = district_data[0].date_at(t);
        if !beta_redrawn && today >= lockdown {
            for m in members.iter_mut() {
                m.beta = redraw_rng.random_range(cfg.beta_post.0..=cfg.beta_post.1);
            }
            beta_redrawn = true;
        }

        // Forecast: one stochastic day per member, delays sampled per event.
        let mut predicted: Vec<Vec<f64>> = vec![vec![0.0; members.len()]; n_districts];
        for (mi, m) in members.iter_mut().enumerate() {
            let params = m.meta_params(mobility);
            let (next, reported) = step_model2(&m.meta, &params, &mut m.rngs)?;
            m.meta = next;
            for (d, &events) in reported.iter().enumerate() {
                for _ in 0..events {
                    let lag = delay.sample_days(&mut m.delay_rng).min(PENDING_DAYS - 1);
                    m.pending[d][lag] += 1.0;
                }
            }
            for d in 0..n_districts {
                predicted[d][mi] = m.pending[d][0];
            }
        }

        // Adjust: assimilate each district observation serially.
        for d in 0..n_districts {
            let y = district_data[d].cases()[t - 1] as f64;
            let obs_var = (y * y / 4.0).max(1.0);
            let z: Vec<f64> = predicted[d].clone();
            let mean = z.iter().sum::<f64>() / z.len() as f64;
            let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / z.len() as f64;
            if var < 1e-12 {
                warnings.push(format!(
                    "{today}: district {} ensemble collapsed (variance {var:.2e}); inflation applied",
                    names[d]
                ));
                continue;
            }
            let (dz, _, _) = eakf_scalar_update(&z, y, obs_var);

            // Regress every state component and parameter onto the observed
            // variable and apply the increments.
            update_components(&mut members, &z, &dz, mean, var, populations);
            // The adjusted observed variable feeds the next district's
            // cross-covariances through the state, not through `predicted`.
        }

        // Parameter-anomaly inflation.
        inflate_parameters(&mut members, cfg.inflation);

        // Advance the pending buffers to tomorrow.
        for m in members.iter_mut() {
            for ring in m.pending.iter_mut() {
                ring.remove(0);
                ring.push(0.0);
            }
        }

        // Weekly summaries.
        if week_start.is_none() {
            week_start = Some(today);
        }
        week_days += 1;
        if week_days == 7 {
            let samples: Vec<f64> = members
                .iter()
                .map(|m| effective_r(m.alpha, m.beta, m.mu, m.infectious))
                .collect();
            weekly.push(RtEstimate::from_samples(
                week_start.take().unwrap(),
                today,
                samples,
            ));
            week_days = 0;
        }
    }

    Ok(EakfOutput { weekly, warnings })
}

/// Applies ensemble increments to every compartment and parameter via the
/// sample covariance with the observed variable.
fn update_components(
    members: &mut [Member],
    z: &[f64],
    dz: &[f64],
    z_mean: f64,
    z_var: f64,
    populations: &[f64],
) {
    let n = members.len() as f64;
    let n_districts = members[0].meta.len();

    // Compartments.
    for d in 0..n_districts {
        for comp in 0..4 {
            let get = |s: &SeirState| match comp {
                0 => s.susceptible,
                1 => s.exposed,
                2 => s.infected_reported,
                _ => s.infected_unreported,
            };
            let x_mean: f64 = members.iter().map(|m| get(&m.meta.districts[d])).sum::<f64>() / n;
            let cov: f64 = members
                .iter()
                .zip(z)
                .map(|(m, &zi)| (get(&m.meta.districts[d]) - x_mean) * (zi - z_mean))
                .sum::<f64>()
                / n;
            let gain = cov / z_var;
            for (m, &dzi) in members.iter_mut().zip(dz) {
                let s = &mut m.meta.districts[d];
                let cap = populations[d] * 1.5;
                let value = match comp {
                    0 => &mut s.susceptible,
                    1 => &mut s.exposed,
                    2 => &mut s.infected_reported,
                    _ => &mut s.infected_unreported,
                };
                *value = (*value + gain * dzi).clamp(0.0, cap);
            }
        }
    }

    // Parameters, with physical bounds only.
    for p in 0..6 {
        let bounds = PARAM_BOUNDS;
        let x_mean: f64 = members.iter().map(|m| m.param_vec()[p]).sum::<f64>() / n;
        let cov: f64 = members
            .iter()
            .zip(z)
            .map(|(m, &zi)| (m.param_vec()[p] - x_mean) * (zi - z_mean))
            .sum::<f64>()
            / n;
        let gain = cov / z_var;
        for (m, &dzi) in members.iter_mut().zip(dz) {
            let target = match p {
                0 => &mut m.beta,
                1 => &mut m.mu,
                2 => &mut m.theta,
                3 => &mut m.latency,
                4 => &mut m.infectious,
                _ => &mut m.alpha,
            };
            *target = (*target + gain * dzi).clamp(bounds[p].0, bounds[p].1);
        }
    }
}

fn inflate_parameters(members: &mut [Member], inflation: f64) {
    let n = members.len() as f64;
    for p in 0..6 {
        let mean: f64 = members.iter().map(|m| m.param_vec()[p]).sum::<f64>() / n;
        let (lo, hi) = PARAM_BOUNDS[p];
        for m in members.iter_mut() {
            let target = match p {
                0 => &mut m.beta,
                1 => &mut m.mu,
                2 => &mut m.theta,
                3 => &mut m.latency,
                4 => &mut m.infectious,
                _ => &mut m.alpha,
            };
            *target = (mean + inflation * (*target - mean)).clamp(lo, hi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_update_matches_conjugate_kalman_formulas() {
        // Large Gaussian prior ensemble, observation 1.0 with unit variance:
        // the conjugate posterior is N(0.5, 0.5).
        let mut rng = RngSeed::new(17).rng();
        let n = 10_000;
        let z: Vec<f64> = (0..n)
            .map(|_| {
                // Box-Muller from uniforms keeps the dependency surface low.
                let u1: f64 = rng.random::<f64>().max(1e-12);
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let (dz, post_mean, post_var) = eakf_scalar_update(&z, 1.0, 1.0);

        // Statistical part: the prior ensemble is only approximately N(0,1).
        assert!((post_mean - 0.5).abs() < 0.02, "posterior mean {post_mean}");
        assert!((post_var - 0.5).abs() < 0.02, "posterior variance {post_var}");

        // Deterministic part: given the empirical moments, the update must
        // reproduce the conjugate formulas to floating precision.
        let mean = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let expect_var = 1.0 / (1.0 / var + 1.0);
        let expect_mean = expect_var * (mean / var + 1.0);
        assert!((post_var - expect_var).abs() / expect_var < 1e-6);
        assert!((post_mean - expect_mean).abs() / expect_mean.abs().max(1.0) < 1e-6);

        // Posterior ensemble moments equal the analytic ones exactly (up to
        // float roundoff) because the adjustment is deterministic.
        let adjusted: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + b).collect();
        let a_mean = adjusted.iter().sum::<f64>() / n as f64;
        let a_var = adjusted.iter().map(|v| (v - a_mean) * (v - a_mean)).sum::<f64>() / n as f64;
        assert!((a_mean - expect_mean).abs() < 1e-9);
        assert!((a_var - expect_var).abs() / expect_var < 1e-9);
    }

    #[test]
    fn infinite_observation_variance_is_a_no_op() {
        let z = vec![0.2, 0.9, 1.4, -0.3, 0.0];
        let (dz, _, _) = eakf_scalar_update(&z, 5.0, f64::INFINITY);
        assert!(dz.iter().all(|&v| v == 0.0));
    }
}
