//! Maximum-likelihood fitting of the log-linear feedback model.
//!
//! The conditional log-likelihood `sum_t [X_t nu_t - exp(nu_t) - ln(X_t!)]`
//! is maximized by BFGS in a reparameterized space that keeps
//! `a1 = tanh(u)` and `a1 + b1 = tanh(v)` strictly inside the stability
//! region. Gradients come from exact sensitivity recursions; standard errors
//! from the inverse observed information at the optimum.

use epiwave_core::IncidenceSeries;
use serde::{Deserialize, Serialize};

use crate::model::{filter_intensity, Intervention, InterventionKind, LogLinCountModel};
use crate::optim::{bfgs, invert};
use crate::{CountTsError, Result};

/// Fit controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    /// Freeze `(a1, b1)` at the given values instead of estimating them.
    pub fixed_feedback: Option<(f64, f64)>,
    /// Estimate `nu_0` jointly (default: fixed at `ln(mean + 1)`).
    pub estimate_nu0: bool,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            fixed_feedback: None,
            estimate_nu0: false,
            max_iter: 500,
        }
    }
}

/// Fitted model with uncertainty and information criteria.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub model: LogLinCountModel,
    /// Standard errors for the free parameters, in the order
    /// `d, a1, b1, gamma_1, ..` (frozen parameters omitted).
    pub std_errors: Vec<f64>,
    pub loglik: f64,
    /// `-2 loglik + p ln T` over the free parameter count `p`.
    pub bic: f64,
    pub fitted_means: Vec<f64>,
    pub converged: bool,
    /// Set when the estimate sits essentially on the stability boundary.
    pub boundary: bool,
    pub n_obs: usize,
    pub n_params: usize,
}

/// Data prepared once per fit.
struct Problem {
    x: Vec<f64>,
    z: Vec<f64>,
    specs: Vec<(usize, InterventionKind)>,
    covariates: Vec<Vec<f64>>, // one row per intervention, length T
    nu0: f64,
    log_fact: f64, // sum of ln(x_t!)
    fixed_feedback: Option<(f64, f64)>,
    estimate_nu0: bool,
}

impl Problem {
    fn new(counts: &[u64], interventions: &[(usize, InterventionKind)], opts: &FitOptions) -> Self {
        let t_max = counts.len();
        let x: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let z: Vec<f64> = x.iter().map(|&v| (v + 1.0).ln()).collect();
        let covariates = interventions
            .iter()
            .map(|&(r, kind)| (1..=t_max).map(|t| kind.covariate(t, r)).collect())
            .collect();
        let log_fact = x.iter().map(|&v| ln_factorial(v)).sum();
        Self {
            x,
            z,
            specs: interventions.to_vec(),
            covariates,
            nu0: LogLinCountModel::default_nu0(counts),
            log_fact,
            fixed_feedback: opts.fixed_feedback,
            estimate_nu0: opts.estimate_nu0,
        }
    }

    fn n_gamma(&self) -> usize {
        self.covariates.len()
    }

    /// Number of free parameters.
    fn n_free(&self) -> usize {
        let core = if self.fixed_feedback.is_some() { 1 } else { 3 };
        core + self.n_gamma() + usize::from(self.estimate_nu0)
    }

    /// Log-likelihood and gradient in the original parameter space
    /// `(d, a1, b1, gamma.., [nu0])`.
    fn loglik_grad(&self, theta: &Theta) -> (f64, ThetaGrad) {
        let t_max = self.x.len();
        let k = self.n_gamma();
        let nu0 = theta.nu0.unwrap_or(self.nu0);

        let mut loglik = -self.log_fact;
        let mut g = ThetaGrad::zero(k, theta.nu0.is_some());

        let mut nu_prev = nu0;
        let mut z_prev = nu0;
        let mut s_d = 0.0;
        let mut s_a = 0.0;
        let mut s_b = 0.0;
        let mut s_g = vec![0.0; k];
        let mut s_n = theta.nu0.map(|_| 0.0);

        for t in 1..=t_max {
            // Sensitivities first: they reference nu_{t-1}.
            s_d = 1.0 + theta.a1 * s_d;
            s_a = nu_prev + theta.a1 * s_a;
            s_b = z_prev + theta.a1 * s_b;
            for (sg, cov) in s_g.iter_mut().zip(&self.covariates) {
                *sg = cov[t - 1] + theta.a1 * *sg;
            }
            if let Some(sn) = s_n.as_mut() {
                *sn = if t == 1 {
                    theta.a1 + theta.b1
                } else {
                    theta.a1 * *sn
                };
            }

            let mut nu = theta.d + theta.a1 * nu_prev + theta.b1 * z_prev;
            for (gamma, cov) in theta.gamma.iter().zip(&self.covariates) {
                nu += gamma * cov[t - 1];
            }
            let lambda = nu.min(500.0).exp();
            let xt = self.x[t - 1];
            loglik += xt * nu - lambda;
            let resid = xt - lambda;
            g.d += resid * s_d;
            g.a1 += resid * s_a;
            g.b1 += resid * s_b;
            for (gg, sg) in g.gamma.iter_mut().zip(&s_g) {
                *gg += resid * sg;
            }
            if let (Some(gn), Some(sn)) = (g.nu0.as_mut(), s_n) {
                *gn += resid * sn;
            }

            nu_prev = nu;
            z_prev = self.z[t - 1];
        }
        (loglik, g)
    }

    /// Packs free parameters into the unconstrained optimizer space.
    fn pack(&self, theta: &Theta) -> Vec<f64> {
        let mut phi = vec![theta.d];
        if self.fixed_feedback.is_none() {
            phi.push(theta.a1.clamp(-0.999_999, 0.999_999).atanh());
            phi.push((theta.a1 + theta.b1).clamp(-0.999_999, 0.999_999).atanh());
        }
        phi.extend(&theta.gamma);
        if let Some(n0) = theta.nu0 {
            phi.push(n0);
        }
        phi
    }

    fn unpack(&self, phi: &[f64]) -> Theta {
        let k = self.n_gamma();
        let mut idx = 0;
        let d = phi[idx];
        idx += 1;
        let (a1, b1) = match self.fixed_feedback {
            Some(ab) => ab,
            None => {
                let a = phi[idx].tanh();
                let w = phi[idx + 1].tanh();
                idx += 2;
                (a, w - a)
            }
        };
        let gamma = phi[idx..idx + k].to_vec();
        idx += k;
        let nu0 = self.estimate_nu0.then(|| phi[idx]);
        Theta { d, a1, b1, gamma, nu0 }
    }

    /// Negative log-likelihood and gradient in optimizer space.
    fn objective(&self, phi: &[f64]) -> (f64, Vec<f64>) {
        let theta = self.unpack(phi);
        let (ll, g) = self.loglik_grad(&theta);
        let mut grad = vec![-g.d];
        if self.fixed_feedback.is_none() {
            // a1 = tanh u, b1 = tanh v - tanh u.
            let sech2_u = 1.0 - phi[1].tanh().powi(2);
            let sech2_v = 1.0 - phi[2].tanh().powi(2);
            grad.push(-(g.a1 - g.b1) * sech2_u);
            grad.push(-g.b1 * sech2_v);
        }
        grad.extend(g.gamma.iter().map(|v| -v));
        if let Some(gn) = g.nu0 {
            grad.push(-gn);
        }
        (-ll, grad)
    }
}

/// Parameter bundle in model space.
#[derive(Debug, Clone)]
struct Theta {
    d: f64,
    a1: f64,
    b1: f64,
    gamma: Vec<f64>,
    nu0: Option<f64>,
}

#[derive(Debug, Clone)]
struct ThetaGrad {
    d: f64,
    a1: f64,
    b1: f64,
    gamma: Vec<f64>,
    nu0: Option<f64>,
}

impl ThetaGrad {
    fn zero(k: usize, with_nu0: bool) -> Self {
        Self {
            d: 0.0,
            a1: 0.0,
            b1: 0.0,
            gamma: vec![0.0; k],
            nu0: with_nu0.then_some(0.0),
        }
    }

    fn free_vec(&self, fixed_feedback: bool) -> Vec<f64> {
        let mut v = vec![self.d];
        if !fixed_feedback {
            v.push(self.a1);
            v.push(self.b1);
        }
        v.extend(&self.gamma);
        if let Some(gn) = self.nu0 {
            v.push(gn);
        }
        v
    }
}

/// Fits the model to an incidence series with the given interventions held
/// at fixed times (their sizes are estimated).
pub fn fit_mle(
    series: &IncidenceSeries,
    interventions: &[(usize, InterventionKind)],
    opts: &FitOptions,
) -> Result<FitReport> {
    fit_mle_counts(series.cases(), interventions, opts)
}

/// [`fit_mle`] on raw counts.
pub fn fit_mle_counts(
    counts: &[u64],
    interventions: &[(usize, InterventionKind)],
    opts: &FitOptions,
) -> Result<FitReport> {
    let t_max = counts.len();
    if t_max < 10 {
        return Err(CountTsError::SeriesTooShort { len: t_max, min: 10 });
    }
    for &(r, kind) in interventions {
        kind.validate()?;
        if r < 1 || r > t_max {
            return Err(CountTsError::InvalidArgument(format!(
                "intervention time {r} outside [1, {t_max}]"
            )));
        }
    }
    if let Some((a1, b1)) = opts.fixed_feedback {
        if a1.abs() >= 1.0 || (a1 + b1).abs() >= 1.0 {
            return Err(CountTsError::InvalidArgument(
                "frozen (a1, b1) outside the stability region".into(),
            ));
        }
    }

    let problem = Problem::new(counts, interventions, opts);
    let k = problem.n_gamma();
    let mean_nu = problem.nu0;

    // A few deterministic starts; the surface is smooth and low-dimensional.
    let starts: Vec<Theta> = [(0.3, 0.3), (0.0, 0.5), (0.6, 0.25)]
        .iter()
        .map(|&(a1, b1)| Theta {
            d: mean_nu * (1.0 - a1 - b1),
            a1,
            b1,
            gamma: vec![0.0; k],
            nu0: opts.estimate_nu0.then_some(mean_nu),
        })
        .collect();

    let mut best: Option<(Vec<f64>, f64, bool, usize)> = None;
    for start in &starts {
        let phi0 = problem.pack(start);
        let result = bfgs(&phi0, |phi| problem.objective(phi), opts.max_iter, 1e-7);
        let better = match &best {
            None => true,
            Some((_, f, conv, _)) => result.1 < *f - 1e-12 || (!(*conv) && result.2),
        };
        if better {
            best = Some(result);
        }
    }
    let (phi_hat, neg_ll, converged, iterations) = best.expect("at least one start");
    let theta = problem.unpack(&phi_hat);
    let report = build_report(&problem, &theta, -neg_ll, converged, counts)?;
    if !converged {
        return Err(CountTsError::NonConvergence {
            iterations,
            best_loglik: report.loglik,
            best: Box::new(report),
        });
    }
    Ok(report)
}

fn build_report(
    problem: &Problem,
    theta: &Theta,
    loglik: f64,
    converged: bool,
    counts: &[u64],
) -> Result<FitReport> {
    let t_max = counts.len();
    let p = problem.n_free();
    let bic = -2.0 * loglik + p as f64 * (t_max as f64).ln();

    let model = LogLinCountModel {
        intercept: theta.d,
        feedback: theta.a1,
        obs_coeff: theta.b1,
        interventions: problem
            .specs
            .iter()
            .zip(&theta.gamma)
            .map(|(&(time, kind), &size)| Intervention { time, kind, size })
            .collect(),
        nu0: theta.nu0.unwrap_or(problem.nu0),
    };

    let boundary = theta.a1.abs() > 0.99 || (theta.a1 + theta.b1).abs() > 0.99;
    let std_errors = standard_errors(problem, theta);
    let fitted_means: Vec<f64> = filter_intensity(&model, counts)?
        .iter()
        .map(|v| v.min(500.0).exp())
        .collect();

    Ok(FitReport {
        model,
        std_errors,
        loglik,
        bic,
        fitted_means,
        converged,
        boundary,
        n_obs: t_max,
        n_params: p,
    })
}

/// Observed-information standard errors by central differences of the
/// analytic gradient in the original parameter space.
fn standard_errors(problem: &Problem, theta: &Theta) -> Vec<f64> {
    let fixed = problem.fixed_feedback.is_some();
    let base = theta.clone();
    let n = problem.n_free();

    let eval = |t: &Theta| -> Vec<f64> {
        let (_, g) = problem.loglik_grad(t);
        g.free_vec(fixed)
    };
    let perturb = |t: &Theta, j: usize, h: f64| -> Theta {
        let mut t = t.clone();
        let mut idx = 0;
        if j == idx {
            t.d += h;
            return t;
        }
        idx += 1;
        if !fixed {
            if j == idx {
                t.a1 += h;
                return t;
            }
            idx += 1;
            if j == idx {
                t.b1 += h;
                return t;
            }
            idx += 1;
        }
        let k = t.gamma.len();
        if j < idx + k {
            t.gamma[j - idx] += h;
            return t;
        }
        idx += k;
        debug_assert_eq!(j, idx);
        if let Some(n0) = t.nu0.as_mut() {
            *n0 += h;
        }
        t
    };

    let mut hessian = vec![vec![0.0; n]; n];
    for j in 0..n {
        let h = 1e-5;
        let gp = eval(&perturb(&base, j, h));
        let gm = eval(&perturb(&base, j, -h));
        for i in 0..n {
            hessian[i][j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    // Information = -Hessian of the log-likelihood; symmetrize first.
    let mut info = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            info[i][j] = -0.5 * (hessian[i][j] + hessian[j][i]);
        }
    }
    match invert(&info) {
        Some(cov) => (0..n)
            .map(|i| {
                let v = cov[i][i];
                if v > 0.0 {
                    v.sqrt()
                } else {
                    f64::NAN
                }
            })
            .collect(),
        None => vec![f64::NAN; n],
    }
}

/// `ln(x!)` via `ln Gamma(x + 1)` (Stirling with correction for large x).
fn ln_factorial(x: f64) -> f64 {
    if x < 0.5 {
        return 0.0;
    }
    let n = x as u64;
    if n <= 20 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        // Stirling series, plenty accurate beyond 20!.
        let xf = x + 1.0;
        0.5 * ((2.0 * std::f64::consts::PI).ln() - xf.ln())
            + xf * ((xf + 1.0 / (12.0 * xf - 0.1 / xf)).ln() - 1.0)
    }
}
