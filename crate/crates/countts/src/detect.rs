//! Iterative intervention detection.
//!
//! Each round fits the current model, score-tests every candidate
//! `(time, kind)` against it, and accepts the most significant candidate if
//! its Bonferroni-adjusted p-value clears the level; accepted effects are
//! then re-estimated jointly before the next scan. The correction of the
//! series for detected effects is implicit in the joint refit.

use epiwave_core::IncidenceSeries;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::fit::{fit_mle_counts, FitOptions, FitReport};
use crate::model::{filter_intensity, InterventionKind};
use crate::optim::invert;
use crate::{CountTsError, Result};

/// Detection controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionOptions {
    /// Familywise significance level after Bonferroni adjustment.
    pub level: f64,
    /// Hard cap on accepted interventions.
    pub max_interventions: usize,
    pub fit: FitOptions,
}

impl Default for DetectionOptions {
    fn default() -> Self {
        Self {
            level: 0.05,
            max_interventions: 5,
            fit: FitOptions::default(),
        }
    }
}

/// One accepted intervention with its detection evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectedIntervention {
    pub time: usize,
    pub kind: InterventionKind,
    /// Size from the final joint fit.
    pub size: f64,
    /// Bonferroni-adjusted p-value at the round in which it was accepted.
    pub p_value: f64,
}

/// Scans for interventions of the given kinds and returns the accepted set
/// together with the final joint fit.
pub fn detect_interventions(
    series: &IncidenceSeries,
    kinds: &[InterventionKind],
    opts: &DetectionOptions,
) -> Result<(Vec<DetectedIntervention>, FitReport)> {
    detect_interventions_counts(series.cases(), kinds, opts)
}

/// [`detect_interventions`] on raw counts.
pub fn detect_interventions_counts(
    counts: &[u64],
    kinds: &[InterventionKind],
    opts: &DetectionOptions,
) -> Result<(Vec<DetectedIntervention>, FitReport)> {
    if kinds.is_empty() {
        return Err(CountTsError::InvalidArgument(
            "at least one intervention kind must be searched".into(),
        ));
    }
    if !(0.0 < opts.level && opts.level < 1.0) {
        return Err(CountTsError::InvalidArgument(format!(
            "significance level must lie in (0,1), got {}",
            opts.level
        )));
    }
    let t_max = counts.len();
    // Boundary times are excluded: effects there are indistinguishable from
    // initialization or end effects.
    let candidate_times: Vec<usize> = (3..=t_max.saturating_sub(2)).collect();
    if candidate_times.is_empty() {
        return Err(CountTsError::SeriesTooShort { len: t_max, min: 10 });
    }
    let n_tests = (candidate_times.len() * kinds.len()) as f64;
    let chi2 = ChiSquared::new(1.0).expect("chi-squared with 1 dof");

    let mut accepted: Vec<(usize, InterventionKind)> = Vec::new();
    let mut detected: Vec<DetectedIntervention> = Vec::new();
    let mut fit = fit_mle_counts(counts, &accepted, &opts.fit)?;

    while accepted.len() < opts.max_interventions {
        let scan = score_scan(counts, &fit, &accepted, kinds, &candidate_times)?;
        let Some((time, kind, stat)) = scan else {
            break;
        };
        let p_adj = ((1.0 - chi2.cdf(stat)) * n_tests).min(1.0);
        if p_adj >= opts.level {
            break;
        }
        accepted.push((time, kind));
        fit = fit_mle_counts(counts, &accepted, &opts.fit)?;
        detected.push(DetectedIntervention {
            time,
            kind,
            size: f64::NAN, // filled from the final joint fit below
            p_value: p_adj,
        });
    }

    for (det, iv) in detected.iter_mut().zip(&fit.model.interventions) {
        det.size = iv.size;
    }
    Ok((detected, fit))
}

/// Best score statistic over all candidates, or `None` when no candidate has
/// a positive efficient information.
fn score_scan(
    counts: &[u64],
    fit: &FitReport,
    accepted: &[(usize, InterventionKind)],
    kinds: &[InterventionKind],
    candidate_times: &[usize],
) -> Result<Option<(usize, InterventionKind, f64)>> {
    let t_max = counts.len();
    let x: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let z: Vec<f64> = x.iter().map(|&v| (v + 1.0).ln()).collect();
    let model = &fit.model;
    let a1 = model.feedback;

    let nu = filter_intensity(model, counts)?;
    let lambda: Vec<f64> = nu.iter().map(|v| v.min(500.0).exp()).collect();

    // Sensitivities of nu_t for the null parameters (d, a1, b1, gammas).
    let n_base = 3 + accepted.len();
    let mut sens = vec![vec![0.0; t_max]; n_base];
    {
        let (mut s_d, mut s_a, mut s_b) = (0.0, 0.0, 0.0);
        let mut s_g = vec![0.0; accepted.len()];
        let mut nu_prev = model.nu0;
        let mut z_prev = model.nu0;
        for t in 1..=t_max {
            s_d = 1.0 + a1 * s_d;
            s_a = nu_prev + a1 * s_a;
            s_b = z_prev + a1 * s_b;
            sens[0][t - 1] = s_d;
            sens[1][t - 1] = s_a;
            sens[2][t - 1] = s_b;
            for (k, &(r, kind)) in accepted.iter().enumerate() {
                s_g[k] = kind.covariate(t, r) + a1 * s_g[k];
                sens[3 + k][t - 1] = s_g[k];
            }
            nu_prev = nu[t - 1];
            z_prev = z[t - 1];
        }
    }

    // Conditional information of the null block and its inverse.
    let mut info = vec![vec![0.0; n_base]; n_base];
    for i in 0..n_base {
        for j in 0..n_base {
            info[i][j] = (0..t_max).map(|t| lambda[t] * sens[i][t] * sens[j][t]).sum();
        }
    }
    let Some(info_inv) = invert(&info) else {
        return Err(CountTsError::Estimation(
            "singular information matrix in the intervention scan".into(),
        ));
    };

    let mut best: Option<(usize, InterventionKind, f64)> = None;
    for &kind in kinds {
        for &tau in candidate_times {
            if accepted
                .iter()
                .any(|&(r, k)| r == tau && k.label() == kind.label())
            {
                continue;
            }
            // Sensitivity of the new effect.
            let mut s_new = vec![0.0; t_max];
            let mut s_prev = 0.0;
            for t in 1..=t_max {
                s_prev = kind.covariate(t, tau) + a1 * s_prev;
                s_new[t - 1] = s_prev;
            }
            let score: f64 = (0..t_max).map(|t| (x[t] - lambda[t]) * s_new[t]).sum();
            let i_nn: f64 = (0..t_max).map(|t| lambda[t] * s_new[t] * s_new[t]).sum();
            let i_nb: Vec<f64> = (0..n_base)
                .map(|j| (0..t_max).map(|t| lambda[t] * s_new[t] * sens[j][t]).sum())
                .collect();
            // Efficient information: i_nn - i_nb' I^-1 i_nb.
            let mut quad = 0.0;
            for i in 0..n_base {
                for j in 0..n_base {
                    quad += i_nb[i] * info_inv[i][j] * i_nb[j];
                }
            }
            let eff = i_nn - quad;
            if eff <= 1e-10 {
                continue;
            }
            let stat = score * score / eff;
            if best.map_or(true, |(_, _, s)| stat > s) {
                best = Some((tau, kind, stat));
            }
        }
    }
    Ok(best)
}
