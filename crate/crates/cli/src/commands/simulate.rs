//! `epiwave simulate` — forward simulation of the compartmental models.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args as ClapArgs;
use epiwave_compartmental::{
    integrate_model3, step_model1, step_model2, Kappa, MetaParams, MetaState, Model1Params,
    Model2Rngs, Model3Params, SeirState, SeirqpdState,
};
use epiwave_core::MobilityMatrix;
use serde::{Deserialize, Serialize};

use crate::bundle::{cell, BundleWriter};
use crate::config::RunConfig;
use crate::error::AppError;

#[derive(Debug, Clone, ClapArgs)]
pub struct Args {
    /// Model: `seir1`, `meta2`, or `seirqpd3`.
    #[arg(long)]
    pub model: String,

    /// TOML parameter file (see the shipped examples under `data/params/`).
    #[arg(long)]
    pub params: PathBuf,

    /// Horizon in days.
    #[arg(long)]
    pub horizon: usize,

    /// Stochastic replicates (deterministic models ignore this).
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
}

/// TOML schema for `seir1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seir1Spec {
    pub params: Model1ParamsSpec,
    pub init: Seir1Init,
    pub start_date: NaiveDate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model1ParamsSpec {
    pub beta: f64,
    pub mu: f64,
    pub latency: f64,
    pub infectious: f64,
    pub alpha: f64,
    #[serde(default = "default_delay_mean")]
    pub delay_mean: f64,
    #[serde(default = "default_delay_shape")]
    pub delay_shape: f64,
}

fn default_delay_mean() -> f64 {
    6.0
}

fn default_delay_shape() -> f64 {
    1.85
}

impl Model1ParamsSpec {
    pub fn build(&self) -> Model1Params {
        Model1Params {
            beta: self.beta,
            mu: self.mu,
            latency: self.latency,
            infectious: self.infectious,
            alpha: self.alpha,
            delay_mean: self.delay_mean,
            delay_shape: self.delay_shape,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seir1Init {
    pub population: f64,
    pub exposed: f64,
    pub unreported: f64,
}

/// TOML schema for `meta2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Meta2Spec {
    pub params: Model1ParamsSpec,
    pub theta: f64,
    /// Path to the mobility matrix CSV.
    pub mobility: PathBuf,
    pub districts: Vec<DistrictInit>,
    pub start_date: NaiveDate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistrictInit {
    pub name: String,
    pub population: f64,
    pub exposed: f64,
    pub unreported: f64,
}

/// TOML schema for `seirqpd3`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seirqpd3Spec {
    pub params: Model3ParamsSpec,
    pub init: Seirqpd3Init,
    pub start_date: NaiveDate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model3ParamsSpec {
    pub protection: f64,
    pub beta: f64,
    pub latent_time: f64,
    pub quarantine_time: f64,
    pub lambda: [f64; 3],
    pub kappa: f64,
}

impl Model3ParamsSpec {
    pub fn build(&self) -> Model3Params {
        Model3Params {
            protection: self.protection,
            beta: self.beta,
            latent_time: self.latent_time,
            quarantine_time: self.quarantine_time,
            recovery: self.lambda,
            mortality: Kappa::Constant(self.kappa),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seirqpd3Init {
    pub population: f64,
    pub exposed: f64,
    pub infected: f64,
    pub quarantined: f64,
    pub recovered: f64,
    pub dead: f64,
}

pub fn run(config: &RunConfig, args: &Args) -> Result<(), AppError> {
    if args.horizon < 1 {
        return Err(AppError::validation("horizon must be at least 1"));
    }
    let text = std::fs::read_to_string(&args.params).map_err(|e| {
        AppError::validation(format!("cannot read {}: {e}", args.params.display()))
    })?;
    let seed = config.seed().derive("simulate");
    let header = ["day", "district", "compartment", "value", "replicate"];
    let mut rows: Vec<Vec<String>> = Vec::new();

    match args.model.as_str() {
        "seir1" => {
            let spec: Seir1Spec =
                toml::from_str(&text).map_err(|e| AppError::validation(format!("params: {e}")))?;
            let params = spec.params.build();
            params.validate()?;
            for rep in 0..args.reps.max(1) {
                let mut rng = seed.derive_index(rep as u64).rng();
                let mut state =
                    SeirState::seeded(spec.init.population, spec.init.exposed, spec.init.unreported);
                push_seir_row(&mut rows, 0, "", &state, rep, 0);
                for day in 1..=args.horizon {
                    let (next, reported) = step_model1(&state, &params, &mut rng)?;
                    state = next;
                    push_seir_row(&mut rows, day, "", &state, rep, reported);
                }
            }
        }
        "meta2" => {
            let spec: Meta2Spec =
                toml::from_str(&text).map_err(|e| AppError::validation(format!("params: {e}")))?;
            let mobility = MobilityMatrix::load(&spec.mobility)?;
            let params = MetaParams {
                epi: spec.params.build(),
                theta: spec.theta,
                mobility,
            };
            let names: Vec<String> = spec.districts.iter().map(|d| d.name.clone()).collect();
            for rep in 0..args.reps.max(1) {
                let mut rngs = Model2Rngs::from_seed(seed.derive_index(rep as u64), names.len());
                let districts: Vec<SeirState> = spec
                    .districts
                    .iter()
                    .map(|d| SeirState::seeded(d.population, d.exposed, d.unreported))
                    .collect();
                let mut state = MetaState::new(districts, names.clone())?;
                for (i, d) in state.districts.iter().enumerate() {
                    push_seir_row(&mut rows, 0, &state.names[i], d, rep, 0);
                }
                for day in 1..=args.horizon {
                    let (next, reported) = step_model2(&state, &params, &mut rngs)?;
                    state = next;
                    for (i, d) in state.districts.iter().enumerate() {
                        push_seir_row(&mut rows, day, &state.names[i], d, rep, reported[i]);
                    }
                }
            }
        }
        "seirqpd3" => {
            let spec: Seirqpd3Spec =
                toml::from_str(&text).map_err(|e| AppError::validation(format!("params: {e}")))?;
            let params = spec.params.build();
            let init = SeirqpdState {
                susceptible: spec.init.population
                    - spec.init.exposed
                    - spec.init.infected
                    - spec.init.quarantined
                    - spec.init.recovered
                    - spec.init.dead,
                insusceptible: 0.0,
                exposed: spec.init.exposed,
                infected: spec.init.infected,
                quarantined: spec.init.quarantined,
                recovered: spec.init.recovered,
                dead: spec.init.dead,
            };
            let trajectory = integrate_model3(&params, &init, args.horizon)?;
            for (day, s) in trajectory.iter().enumerate() {
                for (name, value) in [
                    ("S", s.susceptible),
                    ("P", s.insusceptible),
                    ("E", s.exposed),
                    ("I", s.infected),
                    ("Q", s.quarantined),
                    ("R", s.recovered),
                    ("D", s.dead),
                ] {
                    rows.push(vec![
                        day.to_string(),
                        String::new(),
                        name.into(),
                        cell(value),
                        "0".into(),
                    ]);
                }
            }
        }
        other => {
            return Err(AppError::validation(format!(
                "model must be seir1, meta2 or seirqpd3, got `{other}`"
            )))
        }
    }

    let effective = EffectiveArgs {
        model: args.model.clone(),
        params: args.params.clone(),
        horizon: args.horizon,
        reps: args.reps,
        seed: seed.value(),
    };
    let mut bundle = BundleWriter::create(
        config.out_dir().join("simulate"),
        "simulate",
        config.seed().value(),
        &effective,
    )?;
    bundle.write_csv("trajectory.csv", &header, &rows)?;
    let hash = bundle.finish()?;
    println!("simulate: {} rows, bundle {hash}", rows.len());
    Ok(())
}

fn push_seir_row(
    rows: &mut Vec<Vec<String>>,
    day: usize,
    district: &str,
    state: &SeirState,
    rep: usize,
    reported: u64,
) {
    for (name, value) in [
        ("S", state.susceptible),
        ("E", state.exposed),
        ("Ir", state.infected_reported),
        ("Iu", state.infected_unreported),
        ("new_reported", reported as f64),
    ] {
        rows.push(vec![
            day.to_string(),
            district.to_string(),
            name.into(),
            cell(value),
            rep.to_string(),
        ]);
    }
}

#[derive(Debug, Serialize)]
struct EffectiveArgs {
    model: String,
    params: PathBuf,
    horizon: usize,
    reps: usize,
    seed: u64,
}
