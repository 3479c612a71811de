//! Metapopulation SEIR over districts coupled by commuting flows.
//!
//! Entry `(i, j)` of the mobility matrix counts people traveling from
//! district `i` to district `j` per day. Susceptible and exposed commuters
//! move with their compartments; documented infections do not travel. As
//! printed in the source system, the unreported-infection equations exchange
//! *exposed* commuters against `N - I_u` denominators, an asymmetry kept
//! here deliberately, while the S and E exchanges use `N - I_r`.

use epiwave_core::{MobilityMatrix, RngSeed};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::model1::{sample_poisson, Model1Params, SeirState};
use crate::{CompartmentalError, Result};

/// Model-1 parameters plus the mobility scaling.
#[derive(Debug, Clone)]
pub struct MetaParams {
    pub epi: Model1Params,
    /// Mobility multiplier `theta >= 1` compensating under-reported travel.
    pub theta: f64,
    pub mobility: MobilityMatrix,
}

impl MetaParams {
    pub fn validate(&self, n_districts: usize) -> Result<()> {
        self.epi.validate()?;
        if self.theta < 0.0 || !self.theta.is_finite() {
            return Err(CompartmentalError::InvalidArgument(format!(
                "theta must be non-negative and finite, got {}",
                self.theta
            )));
        }
        if self.mobility.len() != n_districts {
            return Err(CompartmentalError::InvalidArgument(format!(
                "mobility is {}x{} but the state has {} districts",
                self.mobility.len(),
                self.mobility.len(),
                n_districts
            )));
        }
        Ok(())
    }
}

/// Per-district compartments; populations update daily with net commuting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaState {
    pub districts: Vec<SeirState>,
    pub names: Vec<String>,
}

impl MetaState {
    pub fn new(districts: Vec<SeirState>, names: Vec<String>) -> Result<Self> {
        if districts.is_empty() || districts.len() != names.len() {
            return Err(CompartmentalError::InvalidArgument(
                "districts and names must be non-empty and of equal length".into(),
            ));
        }
        Ok(Self { districts, names })
    }

    pub fn len(&self) -> usize {
        self.districts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.districts.is_empty()
    }
}

/// Independent generators: one stream per district plus one for the
/// mobility terms, so zero mobility reproduces model-1 streams exactly.
pub struct Model2Rngs {
    pub districts: Vec<ChaCha12Rng>,
    pub mobility: ChaCha12Rng,
}

impl Model2Rngs {
    pub fn from_seed(seed: RngSeed, n_districts: usize) -> Self {
        let district_seed = seed.derive("model2-district");
        Self {
            districts: (0..n_districts)
                .map(|i| district_seed.derive_index(i as u64).rng())
                .collect(),
            mobility: seed.derive("model2-mobility").rng(),
        }
    }
}

/// Stage fluxes: per-district local terms plus directed mobility exchanges.
struct StageFluxes {
    local: Vec<[f64; 6]>,
    /// `(compartment, from, to, flux)` with compartment 0 = S, 1 = E,
    /// 2 = the unreported-equation exchange.
    moves: Vec<(usize, usize, usize, f64)>,
}

fn stage_fluxes(
    state: &MetaState,
    p: &MetaParams,
    sample_local: &mut dyn FnMut(usize, f64) -> f64,
    sample_move: &mut dyn FnMut(f64) -> f64,
) -> Result<StageFluxes> {
    let n = state.len();
    let mut local = Vec::with_capacity(n);
    for (i, s) in state.districts.iter().enumerate() {
        let means = crate::model1::flux_means(s, &p.epi);
        let mut drawn = [0.0; 6];
        for (slot, mean) in drawn.iter_mut().zip(means) {
            *slot = sample_local(i, mean);
        }
        local.push(drawn);
    }

    let mut moves = Vec::new();
    if p.theta > 0.0 {
        for compartment in 0..3usize {
            for to in 0..n {
                for from in 0..n {
                    if from == to {
                        continue;
                    }
                    let m = p.mobility.flow(from, to);
                    if m == 0.0 {
                        continue;
                    }
                    let src = &state.districts[from];
                    let (numerator, denominator) = match compartment {
                        0 => (
                            src.susceptible.max(0.0),
                            src.population - src.infected_reported,
                        ),
                        1 => (
                            src.exposed.max(0.0),
                            src.population - src.infected_reported,
                        ),
                        // The unreported equations exchange exposed mass
                        // against N - I_u, exactly as printed in the source
                        // system.
                        _ => (
                            src.exposed.max(0.0),
                            src.population - src.infected_unreported,
                        ),
                    };
                    if denominator <= 0.0 {
                        return Err(CompartmentalError::MobilityDenominator {
                            district: state.names[from].clone(),
                            value: denominator,
                        });
                    }
                    let mean = p.theta * m * numerator / denominator;
                    moves.push((compartment, from, to, sample_move(mean)));
                }
            }
        }
    }
    Ok(StageFluxes { local, moves })
}

/// Applies `h`-scaled stage fluxes. The per-district arithmetic goes through
/// the exact model-1 helpers so that a zero mobility matrix reproduces five
/// independent model-1 integrations bit for bit.
fn apply_stage(state: &MetaState, fluxes: &StageFluxes, h: f64) -> MetaState {
    let mut next = state.clone();
    for (i, k) in fluxes.local.iter().enumerate() {
        next.districts[i] = crate::model1::half_step(&state.districts[i], k, h);
    }
    for &(compartment, from, to, flux) in &fluxes.moves {
        let v = h * flux;
        match compartment {
            0 => {
                next.districts[from].susceptible -= v;
                next.districts[to].susceptible += v;
            }
            1 => {
                next.districts[from].exposed -= v;
                next.districts[to].exposed += v;
            }
            _ => {
                next.districts[from].infected_unreported -= v;
                next.districts[to].infected_unreported += v;
            }
        }
    }
    next
}

/// One stochastic day for the metapopulation: RK4 with every unique term
/// Poisson sampled per stage, then the deterministic population update
/// `N_i += theta * (inflow - outflow)`.
pub fn step_model2(
    state: &MetaState,
    p: &MetaParams,
    rngs: &mut Model2Rngs,
) -> Result<(MetaState, Vec<u64>)> {
    let (next, reported) = step_model2_with(
        state,
        p,
        &mut |i, mean| sample_poisson(mean, &mut rngs.districts[i]),
        &mut |mean| sample_poisson(mean, &mut rngs.mobility),
    )?;
    Ok((
        next,
        reported
            .into_iter()
            .map(|f| f.round().max(0.0) as u64)
            .collect(),
    ))
}

/// Deterministic-mean variant of [`step_model2`].
pub fn step_model2_deterministic(
    state: &MetaState,
    p: &MetaParams,
) -> Result<(MetaState, Vec<f64>)> {
    step_model2_with(state, p, &mut |_, mean| mean.max(0.0), &mut |mean| {
        mean.max(0.0)
    })
}

fn step_model2_with(
    state: &MetaState,
    p: &MetaParams,
    sample_local: &mut dyn FnMut(usize, f64) -> f64,
    sample_move: &mut dyn FnMut(f64) -> f64,
) -> Result<(MetaState, Vec<f64>)> {
    p.validate(state.len())?;
    let k1 = stage_fluxes(state, p, sample_local, sample_move)?;
    let s2 = apply_stage(state, &k1, 0.5);
    let k2 = stage_fluxes(&s2, p, sample_local, sample_move)?;
    let s3 = apply_stage(state, &k2, 0.5);
    let k3 = stage_fluxes(&s3, p, sample_local, sample_move)?;
    let s4 = apply_stage(state, &k3, 1.0);
    let k4 = stage_fluxes(&s4, p, sample_local, sample_move)?;

    let n = state.len();
    let mut next = state.clone();
    let mut reported = vec![0.0; n];
    for i in 0..n {
        let combined = crate::model1::combine_rk4(&k1.local[i], &k2.local[i], &k3.local[i], &k4.local[i]);
        next.districts[i] = crate::model1::apply_fluxes(&state.districts[i], &combined);
        reported[i] = combined[2];
    }
    // Mobility moves combine across stages position by position (the four
    // stage lists enumerate the same (compartment, from, to) triples).
    for (idx, &(compartment, from, to, v1)) in k1.moves.iter().enumerate() {
        let v2 = k2.moves[idx].3;
        let v3 = k3.moves[idx].3;
        let v4 = k4.moves[idx].3;
        let v = (v1 + 2.0 * v2 + 2.0 * v3 + v4) / 6.0;
        match compartment {
            0 => {
                next.districts[from].susceptible -= v;
                next.districts[to].susceptible += v;
            }
            1 => {
                next.districts[from].exposed -= v;
                next.districts[to].exposed += v;
            }
            _ => {
                next.districts[from].infected_unreported -= v;
                next.districts[to].infected_unreported += v;
            }
        }
    }

    // Clip and validate, then the daily deterministic population update.
    for (i, d) in next.districts.iter_mut().enumerate() {
        crate::model1::clip_state(d);
        let net = p.theta * (p.mobility.inflow(i) - p.mobility.outflow(i));
        if net != 0.0 {
            d.population += net;
        }
        if d.population <= 0.0 {
            return Err(CompartmentalError::Integration(format!(
                "district {} population fell to {}",
                state.names[i], d.population
            )));
        }
    }
    Ok((next, reported))
}

/// Convenience multi-day stochastic run returning per-district daily new
/// reported infections (before the observation delay).
pub fn simulate_model2(
    init: &MetaState,
    p: &MetaParams,
    horizon: usize,
    seed: RngSeed,
) -> Result<(MetaState, Vec<Vec<u64>>)> {
    let mut rngs = Model2Rngs::from_seed(seed, init.len());
    let mut state = init.clone();
    let mut reported = vec![Vec::with_capacity(horizon); init.len()];
    for _ in 0..horizon {
        let (next, day_reported) = step_model2(&state, p, &mut rngs)?;
        state = next;
        for (i, r) in day_reported.into_iter().enumerate() {
            reported[i].push(r);
        }
    }
    Ok((state, reported))
}
