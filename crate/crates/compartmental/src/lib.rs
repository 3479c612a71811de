//! Compartmental epidemic models.
//!
//! Four related systems share this crate:
//!
//! * model 1 — SEIR split into reported and unreported infections, integrated
//!   stochastically by sampling every flux term from a Poisson distribution
//!   at each Runge-Kutta stage, with a Gamma reporting delay;
//! * model 2 — the five-district version of model 1 coupled through a daily
//!   commuting matrix;
//! * model 3 — a deterministic seven-state system with protection,
//!   quarantine and time-varying cure/mortality rates, fitted to observed
//!   active/recovered/dead counts by least squares;
//! * model 4 — the plain susceptible-infected system backing the Bayesian
//!   rate filter.

mod delay;
mod model1;
mod model2;
mod model3;
mod model3_fit;
mod model4;
mod optim;

use thiserror::Error;

pub use delay::{DelayModel, DelaySpread};
pub use model1::{
    run_model1_expected, run_model1_expected_with, simulate_model1, step_model1, step_model1_deterministic, Model1Params,
    Model1Run, SeirState, SimDiagnostics,
};
pub use model2::{
    simulate_model2, step_model2, step_model2_deterministic, MetaParams, MetaState, Model2Rngs,
};
pub use model3::{integrate_model3, recovery_rate, Kappa, Model3Params, SeirqpdState};
pub use model3_fit::{
    fit_model3, fit_model3_series, sweep_gamma_inv, Fit3Options, FitDiagnostics, Model3Fit,
};
pub use model4::step_model4;

/// Errors from simulation, integration, or fitting.
#[derive(Debug, Error)]
pub enum CompartmentalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("district {district}: non-positive mobility denominator ({value})")]
    MobilityDenominator { district: String, value: f64 },

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error(transparent)]
    Core(#[from] epiwave_core::CoreError),
}

pub type Result<T> = std::result::Result<T, CompartmentalError>;
