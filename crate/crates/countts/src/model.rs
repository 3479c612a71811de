//! Model parameters, intervention covariates and the intensity recursion.

use serde::{Deserialize, Serialize};

use crate::{CountTsError, Result};

/// Shape of one intervention effect on the log-intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InterventionKind {
    /// One-day spike: `xi(t) = 1{t = r}`.
    AdditiveOutlier,
    /// Geometric decay from `r` on: `xi(t) = decay^(t - r)` for `t >= r`.
    TransientShift { decay: f64 },
    /// Permanent step: `xi(t) = 1{t >= r}`.
    LevelShift,
}

impl InterventionKind {
    /// Covariate value at time `t` (1-based) for an effect anchored at `r`.
    pub fn covariate(&self, t: usize, r: usize) -> f64 {
        match *self {
            InterventionKind::AdditiveOutlier => {
                if t == r {
                    1.0
                } else {
                    0.0
                }
            }
            InterventionKind::TransientShift { decay } => {
                if t >= r {
                    decay.powi((t - r) as i32)
                } else {
                    0.0
                }
            }
            InterventionKind::LevelShift => {
                if t >= r {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let InterventionKind::TransientShift { decay } = *self {
            if !(0.0 < decay && decay < 1.0) {
                return Err(CountTsError::InvalidArgument(format!(
                    "transient-shift decay must lie strictly in (0,1), got {decay}"
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            InterventionKind::AdditiveOutlier => "AO",
            InterventionKind::TransientShift { .. } => "TS",
            InterventionKind::LevelShift => "LS",
        }
    }
}

/// An intervention with its anchor time and (log-scale) size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    /// 1-based time index `r_k`.
    pub time: usize,
    pub kind: InterventionKind,
    pub size: f64,
}

/// Parameters of the log-linear feedback model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLinCountModel {
    /// Intercept `d`.
    pub intercept: f64,
    /// Feedback coefficient `a1` on the previous log-intensity.
    pub feedback: f64,
    /// Observation coefficient `b1` on `ln(X_{t-1} + 1)`.
    pub obs_coeff: f64,
    pub interventions: Vec<Intervention>,
    /// Initial log-intensity `nu_0`; also stands in for the unobserved
    /// pre-sample `ln(X_0 + 1)` in the first recursion step.
    pub nu0: f64,
}

impl LogLinCountModel {
    pub fn new(intercept: f64, feedback: f64, obs_coeff: f64, nu0: f64) -> Result<Self> {
        let model = Self {
            intercept,
            feedback,
            obs_coeff,
            interventions: Vec::new(),
            nu0,
        };
        model.check_stability()?;
        Ok(model)
    }

    pub fn with_interventions(mut self, interventions: Vec<Intervention>) -> Result<Self> {
        for iv in &interventions {
            iv.kind.validate()?;
            if iv.time < 1 {
                return Err(CountTsError::InvalidArgument(
                    "intervention time must be >= 1".into(),
                ));
            }
        }
        self.interventions = interventions;
        Ok(self)
    }

    /// Enforces `|a1| < 1` and `|a1 + b1| < 1`.
    pub fn check_stability(&self) -> Result<()> {
        if self.feedback.abs() >= 1.0 || (self.feedback + self.obs_coeff).abs() >= 1.0 {
            return Err(CountTsError::InvalidArgument(format!(
                "(a1, b1) = ({}, {}) outside the stability region",
                self.feedback, self.obs_coeff
            )));
        }
        Ok(())
    }

    /// Total intervention effect on `nu_t`.
    pub fn intervention_effect(&self, t: usize) -> f64 {
        self.interventions
            .iter()
            .map(|iv| iv.size * iv.kind.covariate(t, iv.time))
            .sum()
    }

    /// Default initial log-intensity `ln(mean(X) + 1)`.
    pub fn default_nu0(x: &[u64]) -> f64 {
        let mean = x.iter().map(|&v| v as f64).sum::<f64>() / x.len().max(1) as f64;
        (mean + 1.0).ln()
    }
}

/// Runs the log-intensity recursion over an observed series.
///
/// Returns `nu_1..=nu_T`. The first step uses `nu_0` both as the lagged
/// intensity and as the stand-in for the unobserved `ln(X_0 + 1)`.
pub fn filter_intensity(model: &LogLinCountModel, x: &[u64]) -> Result<Vec<f64>> {
    model.check_stability()?;
    let t_max = x.len();
    let mut nu = Vec::with_capacity(t_max);
    let mut prev_nu = model.nu0;
    let mut prev_z = model.nu0;
    for t in 1..=t_max {
        let v = model.intercept
            + model.feedback * prev_nu
            + model.obs_coeff * prev_z
            + model.intervention_effect(t);
        nu.push(v);
        prev_nu = v;
        prev_z = ((x[t - 1] as f64) + 1.0).ln();
    }
    Ok(nu)
}
