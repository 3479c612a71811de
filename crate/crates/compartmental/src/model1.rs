//! Single-population SEIR with reported and unreported infections.

use chrono::NaiveDate;
use epiwave_core::{IncidenceSeries, RngSeed};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::delay::DelayModel;
use crate::{CompartmentalError, Result};

/// Parameters of models 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model1Params {
    /// Transmission rate `beta` (1/day).
    pub beta: f64,
    /// Relative transmissibility `mu` of unreported infections, in (0, 1].
    pub mu: f64,
    /// Mean latency `Z` in days.
    pub latency: f64,
    /// Mean infectious period `D` in days.
    pub infectious: f64,
    /// Reporting rate `alpha`, in (0, 1].
    pub alpha: f64,
    /// Mean reporting delay `tau_d` in days.
    pub delay_mean: f64,
    /// Gamma shape of the reporting delay.
    pub delay_shape: f64,
}

impl Model1Params {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta", self.beta),
            ("mu", self.mu),
            ("latency", self.latency),
            ("infectious", self.infectious),
            ("alpha", self.alpha),
            ("delay_mean", self.delay_mean),
            ("delay_shape", self.delay_shape),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(CompartmentalError::InvalidArgument(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.alpha > 1.0 || self.mu > 1.0 {
            return Err(CompartmentalError::InvalidArgument(format!(
                "alpha and mu must not exceed 1, got ({}, {})",
                self.alpha, self.mu
            )));
        }
        Ok(())
    }

    pub fn delay(&self) -> DelayModel {
        DelayModel::new(self.delay_mean, self.delay_shape).expect("validated parameters")
    }
}

/// Compartment state `(S, E, I_r, I_u)` in persons over population `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeirState {
    pub susceptible: f64,
    pub exposed: f64,
    pub infected_reported: f64,
    pub infected_unreported: f64,
    pub population: f64,
}

impl SeirState {
    /// Disease-free population of size `n`.
    pub fn disease_free(n: f64) -> Self {
        Self {
            susceptible: n,
            exposed: 0.0,
            infected_reported: 0.0,
            infected_unreported: 0.0,
            population: n,
        }
    }

    /// Seeds `exposed` and `unreported` cases, taken out of the susceptibles.
    pub fn seeded(n: f64, exposed: f64, unreported: f64) -> Self {
        Self {
            susceptible: n - exposed - unreported,
            exposed,
            infected_reported: 0.0,
            infected_unreported: unreported,
            population: n,
        }
    }

    fn check_bounds(&self) -> Result<()> {
        let cap = self.population * (1.0 + 1e-9) + 10.0;
        for (name, v) in [
            ("S", self.susceptible),
            ("E", self.exposed),
            ("Ir", self.infected_reported),
            ("Iu", self.infected_unreported),
        ] {
            if !v.is_finite() || v > cap {
                return Err(CompartmentalError::Integration(format!(
                    "compartment {name} = {v} escaped the population bound {}",
                    self.population
                )));
            }
        }
        Ok(())
    }
}

/// The six flux terms of the right-hand side, evaluated at a (clipped)
/// stage state. Order is part of the reproducibility contract.
pub(crate) fn flux_means(state: &SeirState, p: &Model1Params) -> [f64; 6] {
    let s = state.susceptible.max(0.0);
    let e = state.exposed.max(0.0);
    let ir = state.infected_reported.max(0.0);
    let iu = state.infected_unreported.max(0.0);
    let n = state.population.max(1.0);
    [
        p.beta * s * ir / n,          // documented infection pressure
        p.mu * p.beta * s * iu / n,   // undocumented infection pressure
        p.alpha * e / p.latency,      // E -> Ir
        (1.0 - p.alpha) * e / p.latency, // E -> Iu
        ir / p.infectious,            // Ir removal
        iu / p.infectious,            // Iu removal
    ]
}

pub(crate) fn apply_fluxes(state: &SeirState, f: &[f64; 6]) -> SeirState {
    SeirState {
        susceptible: state.susceptible - f[0] - f[1],
        exposed: state.exposed + f[0] + f[1] - f[2] - f[3],
        infected_reported: state.infected_reported + f[2] - f[4],
        infected_unreported: state.infected_unreported + f[3] - f[5],
        population: state.population,
    }
}

pub(crate) fn half_step(state: &SeirState, k: &[f64; 6], h: f64) -> SeirState {
    let scaled = [
        k[0] * h,
        k[1] * h,
        k[2] * h,
        k[3] * h,
        k[4] * h,
        k[5] * h,
    ];
    apply_fluxes(state, &scaled)
}

pub(crate) fn combine_rk4(k1: &[f64; 6], k2: &[f64; 6], k3: &[f64; 6], k4: &[f64; 6]) -> [f64; 6] {
    let mut combined = [0.0; 6];
    for i in 0..6 {
        combined[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    combined
}

pub(crate) fn clip_state(state: &mut SeirState) {
    state.susceptible = state.susceptible.max(0.0);
    state.exposed = state.exposed.max(0.0);
    state.infected_reported = state.infected_reported.max(0.0);
    state.infected_unreported = state.infected_unreported.max(0.0);
}

pub(crate) fn sample_poisson<R: Rng>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean.min(1e12))
        .expect("positive finite mean")
        .sample(rng)
}

/// One-day fourth-order Runge-Kutta step with every flux term Poisson
/// sampled at each stage; compartments are clipped at zero afterwards.
///
/// Returns the new state and the day's new reported infections (the
/// stage-weighted `alpha E / Z` flux, rounded to a whole count).
pub fn step_model1<R: Rng>(
    state: &SeirState,
    p: &Model1Params,
    rng: &mut R,
) -> Result<(SeirState, u64)> {
    step_model1_with(state, p, &mut |mean| sample_poisson(mean, rng))
        .map(|(s, flux)| (s, flux.round().max(0.0) as u64))
}

/// Deterministic variant: each Poisson draw replaced by its mean.
pub fn step_model1_deterministic(state: &SeirState, p: &Model1Params) -> Result<(SeirState, f64)> {
    step_model1_with(state, p, &mut |mean| mean.max(0.0))
}

fn step_model1_with(
    state: &SeirState,
    p: &Model1Params,
    sample: &mut dyn FnMut(f64) -> f64,
) -> Result<(SeirState, f64)> {
    let draw_stage = |state: &SeirState, sample: &mut dyn FnMut(f64) -> f64| -> [f64; 6] {
        let means = flux_means(state, p);
        let mut out = [0.0; 6];
        for (o, m) in out.iter_mut().zip(means) {
            *o = sample(m);
        }
        out
    };

    // Classic RK4 over one day: k2 and k3 at the midpoint, k4 at the end.
    let k1 = draw_stage(state, sample);
    let s2 = half_step(state, &k1, 0.5);
    let k2 = draw_stage(&s2, sample);
    let s3 = half_step(state, &k2, 0.5);
    let k3 = draw_stage(&s3, sample);
    let s4 = half_step(state, &k3, 1.0);
    let k4 = draw_stage(&s4, sample);

    let combined = combine_rk4(&k1, &k2, &k3, &k4);
    let mut next = apply_fluxes(state, &combined);
    clip_state(&mut next);
    next.check_bounds()?;
    Ok((next, combined[2]))
}

/// Diagnostics from a stochastic run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SimDiagnostics {
    /// Reported infections whose recording fell beyond the horizon.
    pub dropped_recordings: u64,
    /// Total reported-infection events generated.
    pub total_reported_flux: u64,
}

/// Simulates daily recorded cases over `horizon` days.
///
/// Each new reported infection receives a Gamma reporting delay and is
/// recorded `ceil(delay)` days later; recordings beyond the horizon are
/// dropped and counted in the diagnostics.
pub fn simulate_model1(
    p: &Model1Params,
    init: &SeirState,
    horizon: usize,
    start_date: NaiveDate,
    seed: RngSeed,
) -> Result<(IncidenceSeries, SimDiagnostics)> {
    p.validate()?;
    if horizon < 1 {
        return Err(CompartmentalError::InvalidArgument(
            "horizon must be at least 1".into(),
        ));
    }
    let mut state_rng = seed.derive("model1-compartments").rng();
    let mut delay_rng = seed.derive("model1-delays").rng();
    let delay = p.delay();

    let mut recorded = vec![0u64; horizon];
    let mut diag = SimDiagnostics::default();
    let mut state = *init;
    for day in 0..horizon {
        let (next, new_reported) = step_model1(&state, p, &mut state_rng)?;
        state = next;
        diag.total_reported_flux += new_reported;
        for _ in 0..new_reported {
            let lag = delay.sample_days(&mut delay_rng);
            let target = day + lag;
            if target < horizon {
                recorded[target] += 1;
            } else {
                diag.dropped_recordings += 1;
            }
        }
    }
    let series = IncidenceSeries::new(start_date, recorded, "model1-simulation")?;
    Ok((series, diag))
}

/// Output of a deterministic run: expected daily recordings plus carry-over
/// state for chained windows.
#[derive(Debug, Clone)]
pub struct Model1Run {
    /// Expected recorded cases per day of this window.
    pub recorded: Vec<f64>,
    pub end_state: SeirState,
    /// Expected recordings already generated but landing after the window;
    /// index 0 is the first day after the window.
    pub pending_out: Vec<f64>,
}

/// Deterministic-mean run with delay spreading, used by the likelihood
/// evaluations. `pending_in[k]` is the expected recording on day `k+1` of
/// this window inherited from earlier infections.
pub fn run_model1_expected(
    p: &Model1Params,
    init: &SeirState,
    pending_in: &[f64],
    horizon: usize,
) -> Result<Model1Run> {
    let spread = p.delay().spread();
    run_model1_expected_with(p, &spread, init, pending_in, horizon)
}

/// [`run_model1_expected`] with a precomputed delay discretization, for
/// callers that evaluate many parameter sets under one delay model.
pub fn run_model1_expected_with(
    p: &Model1Params,
    spread: &crate::delay::DelaySpread,
    init: &SeirState,
    pending_in: &[f64],
    horizon: usize,
) -> Result<Model1Run> {
    let tail = spread.weights.len();
    let mut buffer = vec![0.0; horizon + tail + 1];
    for (k, &v) in pending_in.iter().enumerate() {
        if k < buffer.len() {
            buffer[k] += v;
        }
    }
    let mut state = *init;
    for day in 0..horizon {
        let (next, flux) = step_model1_deterministic(&state, p)?;
        state = next;
        // Infections on `day` are recorded from day+1 on.
        for (k, &w) in spread.weights.iter().enumerate() {
            let target = day + 1 + k;
            if target < buffer.len() {
                buffer[target] += flux * w;
            }
        }
    }
    let recorded = buffer[..horizon].to_vec();
    let pending_out = buffer[horizon..].to_vec();
    Ok(Model1Run {
        recorded,
        end_state: state,
        pending_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> Model1Params {
        Model1Params {
            beta: 1.2,
            mu: 0.5,
            latency: 5.1,
            infectious: 3.5,
            alpha: 0.5,
            delay_mean: 6.0,
            delay_shape: 1.85,
        }
    }

    #[test]
    fn empty_compartments_are_a_fixed_point() {
        let state = SeirState::disease_free(100_000.0);
        let (next, reported) = step_model1(&state, &params(), &mut RngSeed::new(1).rng()).unwrap();
        assert_eq!(next, state);
        assert_eq!(reported, 0);
    }

    #[test]
    fn full_reporting_keeps_unreported_empty() {
        let p = Model1Params {
            alpha: 1.0,
            ..params()
        };
        let mut state = SeirState::seeded(100_000.0, 50.0, 0.0);
        let mut rng = RngSeed::new(2).rng();
        for _ in 0..30 {
            let (next, _) = step_model1(&state, &p, &mut rng).unwrap();
            state = next;
            assert_eq!(state.infected_unreported, 0.0);
        }
    }

    #[test]
    fn zero_seed_simulation_is_all_zero() {
        let init = SeirState::disease_free(10_000.0);
        let start = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
        let (series, diag) =
            simulate_model1(&params(), &init, 30, start, RngSeed::new(9)).unwrap();
        assert!(series.cases().iter().all(|&c| c == 0));
        assert_eq!(diag.total_reported_flux, 0);
    }

    #[test]
    fn recorded_events_never_exceed_generated_events() {
        let init = SeirState::seeded(875_000.0, 10.0, 5.0);
        let start = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
        let (series, diag) =
            simulate_model1(&params(), &init, 60, start, RngSeed::new(4)).unwrap();
        let recorded: u64 = series.cases().iter().sum();
        assert_eq!(recorded + diag.dropped_recordings, diag.total_reported_flux);
        assert!(recorded <= diag.total_reported_flux);
        assert!(diag.total_reported_flux > 0, "outbreak should take off");
    }

    #[test]
    fn deterministic_run_conserves_expected_recordings() {
        let p = params();
        let init = SeirState::seeded(875_000.0, 10.0, 0.0);
        let run = run_model1_expected(&p, &init, &[], 40).unwrap();
        // Flux spread over the window plus pending tail must equal the total
        // generated flux.
        let mut state = init;
        let mut total_flux = 0.0;
        for _ in 0..40 {
            let (next, flux) = step_model1_deterministic(&state, &p).unwrap();
            state = next;
            total_flux += flux;
        }
        let landed: f64 = run.recorded.iter().sum::<f64>() + run.pending_out.iter().sum::<f64>();
        assert!(
            (landed - total_flux).abs() < 1e-6 * total_flux.max(1.0),
            "{landed} vs {total_flux}"
        );
    }
}
