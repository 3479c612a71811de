//! Count time-series modelling for daily incidence data.
//!
//! The observation `X_t` is conditionally Poisson with log-intensity
//!
//! ```text
//! nu_t = d + a1 * nu_{t-1} + b1 * ln(X_{t-1} + 1) + sum_k gamma_k * xi_k(t)
//! ```
//!
//! where the `xi_k` are intervention covariates (additive outlier, transient
//! shift, level shift). Fitting is by maximum likelihood inside the
//! stability region `|a1| < 1`, `|a1 + b1| < 1`; detection scans candidate
//! interventions with score tests; forecasting simulates Poisson paths fed
//! back through the recursion.

mod detect;
mod fit;
mod forecast;
mod model;
mod optim;

use thiserror::Error;

pub use detect::{detect_interventions, detect_interventions_counts, DetectedIntervention, DetectionOptions};
pub use fit::{fit_mle, fit_mle_counts, FitOptions, FitReport};
pub use forecast::{forecast_paths, predict_counts, simulate_path, simulate_series};
pub use model::{filter_intensity, Intervention, InterventionKind, LogLinCountModel};

/// Errors from fitting, detection, or forecasting.
#[derive(Debug, Error)]
pub enum CountTsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series too short: {len} observations, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("optimizer did not converge after {iterations} iterations (best loglik {best_loglik})")]
    NonConvergence {
        iterations: usize,
        best_loglik: f64,
        /// Best iterate found, usable for diagnosis.
        best: Box<FitReport>,
    },

    #[error("estimation error: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, CountTsError>;
