//! Seven-state deterministic system with protection and quarantine.
//!
//! States `(S, P, E, I, Q, R, D)`: susceptibles are protected at rate
//! `zeta` or exposed at rate `beta I / N`; exposure becomes infectious at
//! rate `gamma`, infection is quarantined at rate `delta`, and quarantined
//! cases resolve to recovered at the time-varying rate `lambda(t)` or die at
//! rate `kappa(t)`. The total is conserved exactly by construction.

use serde::{Deserialize, Serialize};

use crate::{CompartmentalError, Result};

/// Compartments in persons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeirqpdState {
    pub susceptible: f64,
    pub insusceptible: f64,
    pub exposed: f64,
    pub infected: f64,
    pub quarantined: f64,
    pub recovered: f64,
    pub dead: f64,
}

impl SeirqpdState {
    pub fn total(&self) -> f64 {
        self.susceptible
            + self.insusceptible
            + self.exposed
            + self.infected
            + self.quarantined
            + self.recovered
            + self.dead
    }

    fn as_array(&self) -> [f64; 7] {
        [
            self.susceptible,
            self.insusceptible,
            self.exposed,
            self.infected,
            self.quarantined,
            self.recovered,
            self.dead,
        ]
    }

    fn from_array(v: &[f64; 7]) -> Self {
        Self {
            susceptible: v[0],
            insusceptible: v[1],
            exposed: v[2],
            infected: v[3],
            quarantined: v[4],
            recovered: v[5],
            dead: v[6],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("S", self.susceptible),
            ("P", self.insusceptible),
            ("E", self.exposed),
            ("I", self.infected),
            ("Q", self.quarantined),
            ("R", self.recovered),
            ("D", self.dead),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(CompartmentalError::InvalidArgument(format!(
                    "compartment {name} = {v} must be a non-negative real"
                )));
            }
        }
        Ok(())
    }
}

/// Mortality rate: a constant or one value per day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Kappa {
    Constant(f64),
    /// `values[d]` applies on day `d` (piecewise constant).
    Series(Vec<f64>),
}

impl Kappa {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Kappa::Constant(k) => *k,
            Kappa::Series(values) => {
                if values.is_empty() {
                    return 0.0;
                }
                let idx = (t.max(0.0) as usize).min(values.len() - 1);
                values[idx]
            }
        }
    }
}

/// Parameters of the seven-state system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model3Params {
    /// Protection rate `zeta` (1/day).
    pub protection: f64,
    /// Transmission rate `beta` (1/day).
    pub beta: f64,
    /// Mean latent time `1/gamma` in days.
    pub latent_time: f64,
    /// Mean time to quarantine `1/delta` in days.
    pub quarantine_time: f64,
    /// Cure-rate curve `(lambda1, lambda2, lambda3)`.
    pub recovery: [f64; 3],
    pub mortality: Kappa,
}

impl Model3Params {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("protection", self.protection),
            ("beta", self.beta),
            ("latent_time", self.latent_time),
            ("quarantine_time", self.quarantine_time),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(CompartmentalError::InvalidArgument(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if self.latent_time <= 0.0 || self.quarantine_time <= 0.0 {
            return Err(CompartmentalError::InvalidArgument(
                "latent and quarantine times must be positive".into(),
            ));
        }
        if self.recovery.iter().any(|&l| !l.is_finite() || l < 0.0) {
            return Err(CompartmentalError::InvalidArgument(format!(
                "recovery parameters must be non-negative, got {:?}",
                self.recovery
            )));
        }
        Ok(())
    }
}

/// Logistic cure rate `lambda1 / (1 + exp(-lambda2 (t - lambda3)))`.
pub fn recovery_rate(t: f64, lambda: &[f64; 3]) -> f64 {
    lambda[0] / (1.0 + (-lambda[1] * (t - lambda[2])).exp())
}

fn derivatives(t: f64, y: &[f64; 7], p: &Model3Params, n: f64) -> [f64; 7] {
    let gamma = 1.0 / p.latent_time;
    let delta = 1.0 / p.quarantine_time;
    let lambda = recovery_rate(t, &p.recovery);
    let kappa = p.mortality.at(t);
    let s = y[0];
    let e = y[2];
    let i = y[3];
    let q = y[4];
    let infection = p.beta * s * i / n;
    [
        -infection - p.protection * s,
        p.protection * s,
        infection - gamma * e,
        gamma * e - delta * i,
        delta * i - lambda * q - kappa * q,
        lambda * q,
        kappa * q,
    ]
}

/// Integrates the system over `horizon` whole days with an adaptive
/// Runge-Kutta-Fehlberg 4(5) scheme, returning the state at `t = 0..=horizon`.
pub fn integrate_model3(
    p: &Model3Params,
    init: &SeirqpdState,
    horizon: usize,
) -> Result<Vec<SeirqpdState>> {
    p.validate()?;
    init.validate()?;
    let n = init.total();
    if n <= 0.0 {
        return Err(CompartmentalError::InvalidArgument(
            "total population must be positive".into(),
        ));
    }
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(*init);
    let mut y = init.as_array();
    let rtol = 1e-9;
    let atol = 1e-9 * n;

    for day in 0..horizon {
        let mut t = day as f64;
        let t_end = t + 1.0;
        let mut h = 0.25f64;
        let mut guard = 0usize;
        while t < t_end - 1e-12 {
            guard += 1;
            if guard > 100_000 {
                return Err(CompartmentalError::Integration(format!(
                    "step-size underflow near t = {t}"
                )));
            }
            h = h.min(t_end - t);
            let (y5, err) = rkf45_step(t, &y, h, p, n);
            let scale = y
                .iter()
                .zip(&y5)
                .map(|(a, b)| atol + rtol * a.abs().max(b.abs()))
                .collect::<Vec<f64>>();
            let err_norm = err
                .iter()
                .zip(&scale)
                .map(|(e, s)| (e / s) * (e / s))
                .sum::<f64>()
                .sqrt()
                / (7.0f64).sqrt();
            if err_norm <= 1.0 {
                t += h;
                y = y5;
            }
            let factor = if err_norm > 0.0 {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h *= factor;
            if h < 1e-10 {
                return Err(CompartmentalError::Integration(format!(
                    "step-size underflow near t = {t}"
                )));
            }
        }
        out.push(SeirqpdState::from_array(&y));
    }
    Ok(out)
}

/// One Runge-Kutta-Fehlberg step returning the 5th-order solution and the
/// componentwise 4th/5th-order error estimate.
fn rkf45_step(t: f64, y: &[f64; 7], h: f64, p: &Model3Params, n: f64) -> ([f64; 7], [f64; 7]) {
    const A2: f64 = 0.25;
    const A3: [f64; 2] = [3.0 / 32.0, 9.0 / 32.0];
    const A4: [f64; 3] = [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0];
    const A5: [f64; 4] = [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0];
    const A6: [f64; 5] = [
        -8.0 / 27.0,
        2.0,
        -3544.0 / 2565.0,
        1859.0 / 4104.0,
        -11.0 / 40.0,
    ];
    const C: [f64; 6] = [0.0, 0.25, 3.0 / 8.0, 12.0 / 13.0, 1.0, 0.5];
    const B5: [f64; 6] = [
        16.0 / 135.0,
        0.0,
        6656.0 / 12825.0,
        28561.0 / 56430.0,
        -9.0 / 50.0,
        2.0 / 55.0,
    ];
    const B4: [f64; 6] = [
        25.0 / 216.0,
        0.0,
        1408.0 / 2565.0,
        2197.0 / 4104.0,
        -0.2,
        0.0,
    ];

    let add = |y: &[f64; 7], ks: &[(&[f64; 7], f64)]| -> [f64; 7] {
        let mut out = *y;
        for (k, w) in ks {
            for i in 0..7 {
                out[i] += h * w * k[i];
            }
        }
        out
    };

    let k1 = derivatives(t + C[0] * h, y, p, n);
    let k2 = derivatives(t + C[1] * h, &add(y, &[(&k1, A2)]), p, n);
    let k3 = derivatives(t + C[2] * h, &add(y, &[(&k1, A3[0]), (&k2, A3[1])]), p, n);
    let k4 = derivatives(
        t + C[3] * h,
        &add(y, &[(&k1, A4[0]), (&k2, A4[1]), (&k3, A4[2])]),
        p,
        n,
    );
    let k5 = derivatives(
        t + C[4] * h,
        &add(y, &[(&k1, A5[0]), (&k2, A5[1]), (&k3, A5[2]), (&k4, A5[3])]),
        p,
        n,
    );
    let k6 = derivatives(
        t + C[5] * h,
        &add(
            y,
            &[
                (&k1, A6[0]),
                (&k2, A6[1]),
                (&k3, A6[2]),
                (&k4, A6[3]),
                (&k5, A6[4]),
            ],
        ),
        p,
        n,
    );

    let ks = [&k1, &k2, &k3, &k4, &k5, &k6];
    let mut y5 = *y;
    let mut err = [0.0; 7];
    for i in 0..7 {
        let mut hi5 = 0.0;
        let mut hi4 = 0.0;
        for (k, (b5, b4)) in ks.iter().zip(B5.iter().zip(B4.iter())) {
            hi5 += b5 * k[i];
            hi4 += b4 * k[i];
        }
        y5[i] += h * hi5;
        err[i] = h * (hi5 - hi4);
    }
    (y5, err)
}
