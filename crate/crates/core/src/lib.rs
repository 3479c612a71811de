//! Shared domain types for the epiwave toolkit.
//!
//! Everything downstream builds on three contracts defined here:
//!
//! * [`IncidenceSeries`] — validated, gap-free daily count data addressed by
//!   the integer index `t = 1..=T`;
//! * [`RngSeed`] — the single reproducibility handle: identical seed and
//!   identical inputs give bit-identical outputs in every stochastic
//!   operation of the toolkit;
//! * [`PredictionInterval`] — the common shape of a forecast for one day
//!   ahead of the observed sample.
//!
//! All types are immutable after construction and safe to share across
//! threads; free functions are pure.

pub mod error;
pub mod interval;
pub mod metrics;
pub mod mobility;
pub mod seed;
pub mod series;

pub use error::CoreError;
pub use interval::PredictionInterval;
pub use metrics::relative_error;
pub use mobility::{DistrictTable, MobilityMatrix};
pub use seed::RngSeed;
pub use series::{ColumnSchema, IncidenceSeries};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
