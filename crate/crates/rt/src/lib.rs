//! Effective reproduction number estimation.
//!
//! Four estimators share the [`RtEstimate`] output shape:
//!
//! * [`mcmc_model1`] — fortnightly posteriors for `(alpha, beta)` under the
//!   single-population reported/unreported model, sampled by an independence
//!   sampler whose proposal is the prior;
//! * [`eakf_model2`] — weekly ensemble-adjustment Kalman estimates under the
//!   five-district metapopulation model;
//! * [`bettencourt_rt`] — a daily gridded Bayesian filter on the
//!   susceptible-infected growth mapping with a sliding likelihood window;
//! * [`cori_rt`] — the serial-interval benchmark with a conjugate Gamma
//!   posterior per window.

mod bettencourt;
mod cori;
mod eakf;
mod effective;
mod estimate;
mod mcmc;

use thiserror::Error;

pub use bettencourt::{bettencourt_rt, posterior_mode, BettencourtOptions, DailyRt};
pub use cori::{cori_rt, CoriOptions, WeeklyRt};
pub use eakf::{eakf_model2, eakf_scalar_update, EakfOutput, EnsembleConfig};
pub use effective::effective_r;
pub use estimate::{RtEstimate, RtPosterior};
pub use mcmc::{default_prior_schedule, mcmc_model1, BetaPrior, McmcOptions, McmcOutput, PriorSpec, TransmissionPrior};

/// Errors across the estimators.
#[derive(Debug, Error)]
pub enum RtError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid period partition: {0}")]
    Partition(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error(transparent)]
    Compartmental(#[from] epiwave_compartmental::CompartmentalError),

    #[error(transparent)]
    Core(#[from] epiwave_core::CoreError),
}

pub type Result<T> = std::result::Result<T, RtError>;
