//! Independent-integrator oracles and ensemble-mean checks.

use epiwave_compartmental::{
    integrate_model3, step_model1, step_model1_deterministic, Kappa, Model1Params, Model3Params,
    SeirState, SeirqpdState,
};
use epiwave_core::RngSeed;
use rand::Rng;

fn model1_params() -> Model1Params {
    Model1Params {
        beta: 1.2,
        mu: 0.5,
        latency: 5.1,
        infectious: 3.5,
        alpha: 0.5,
        delay_mean: 6.0,
        delay_shape: 1.85,
    }
}

/// Plainly-coded RK4 day step of the four-compartment system, written
/// directly from the differential equations with no flux bookkeeping.
fn oracle_step(state: [f64; 4], p: &Model1Params, n: f64) -> [f64; 4] {
    let deriv = |y: [f64; 4]| -> [f64; 4] {
        let (s, e, ir, iu) = (y[0], y[1], y[2], y[3]);
        let pressure = p.beta * s * ir / n + p.mu * p.beta * s * iu / n;
        [
            -pressure,
            pressure - e / p.latency,
            p.alpha * e / p.latency - ir / p.infectious,
            (1.0 - p.alpha) * e / p.latency - iu / p.infectious,
        ]
    };
    let add = |y: [f64; 4], k: [f64; 4], h: f64| -> [f64; 4] {
        [
            y[0] + h * k[0],
            y[1] + h * k[1],
            y[2] + h * k[2],
            y[3] + h * k[3],
        ]
    };
    let k1 = deriv(state);
    let k2 = deriv(add(state, k1, 0.5));
    let k3 = deriv(add(state, k2, 0.5));
    let k4 = deriv(add(state, k3, 1.0));
    let mut out = state;
    for i in 0..4 {
        out[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    out
}

#[test]
fn deterministic_model1_matches_independent_rk4() {
    let p = model1_params();
    let n = 875_000.0;
    let mut state = SeirState::seeded(n, 10.0, 0.0);
    let mut oracle = [state.susceptible, 10.0, 0.0, 0.0];
    for day in 1..=60 {
        let (next, _) = step_model1_deterministic(&state, &p).unwrap();
        state = next;
        oracle = oracle_step(oracle, &p, n);
        for (got, want) in [
            (state.susceptible, oracle[0]),
            (state.exposed, oracle[1]),
            (state.infected_reported, oracle[2]),
            (state.infected_unreported, oracle[3]),
        ] {
            let rel = (got - want).abs() / want.abs().max(1.0);
            assert!(rel < 1e-6, "day {day}: {got} vs {want} (rel {rel:e})");
        }
    }
    assert!(state.infected_reported > 100.0, "outbreak should be visible");
}

#[test]
fn stochastic_ensemble_mean_tracks_deterministic_trajectory() {
    let p = model1_params();
    let n = 10_000.0;
    let init = SeirState::seeded(n, 50.0, 20.0);
    let horizon = 30usize;
    let reps = 500usize;

    // Deterministic reference path of the reported compartment.
    let mut reference = Vec::with_capacity(horizon);
    let mut state = init;
    for _ in 0..horizon {
        let (next, _) = step_model1_deterministic(&state, &p).unwrap();
        state = next;
        reference.push(state.infected_reported);
    }

    // Ensemble of seeded stochastic paths.
    let seed = RngSeed::new(314).derive("ensemble");
    let mut sums = vec![0.0; horizon];
    let mut sq_sums = vec![0.0; horizon];
    for rep in 0..reps {
        let mut rng = seed.derive_index(rep as u64).rng();
        let mut s = init;
        for (day, (sum, sq)) in sums.iter_mut().zip(sq_sums.iter_mut()).enumerate() {
            let (next, _) = step_model1(&s, &p, &mut rng).unwrap();
            s = next;
            let v = s.infected_reported;
            *sum += v;
            *sq += v * v;
            let _ = day;
        }
    }
    for day in 0..horizon {
        let mean = sums[day] / reps as f64;
        let var = (sq_sums[day] / reps as f64 - mean * mean).max(0.0);
        let se = (var / reps as f64).sqrt();
        let gap = (mean - reference[day]).abs();
        assert!(
            gap <= 3.0 * se + 1e-9,
            "day {}: ensemble mean {mean} vs deterministic {} (3 s.e. = {})",
            day + 1,
            reference[day],
            3.0 * se
        );
    }
}

/// Plain fixed-step RK4 of the seven-state system at dt = 0.01.
fn oracle_model3(p: &Model3Params, init: &SeirqpdState, horizon: usize) -> Vec<[f64; 7]> {
    let n = init.total();
    let deriv = |t: f64, y: [f64; 7]| -> [f64; 7] {
        let gamma = 1.0 / p.latent_time;
        let delta = 1.0 / p.quarantine_time;
        let lam = p.recovery[0] / (1.0 + (-p.recovery[1] * (t - p.recovery[2])).exp());
        let kap = match &p.mortality {
            Kappa::Constant(k) => *k,
            Kappa::Series(v) => v[(t as usize).min(v.len() - 1)],
        };
        let infection = p.beta * y[0] * y[3] / n;
        [
            -infection - p.protection * y[0],
            p.protection * y[0],
            infection - gamma * y[2],
            gamma * y[2] - delta * y[3],
            delta * y[3] - lam * y[4] - kap * y[4],
            lam * y[4],
            kap * y[4],
        ]
    };
    let mut y = [
        init.susceptible,
        init.insusceptible,
        init.exposed,
        init.infected,
        init.quarantined,
        init.recovered,
        init.dead,
    ];
    let dt = 0.01;
    let mut out = vec![y];
    for day in 0..horizon {
        let mut t = day as f64;
        for _ in 0..100 {
            let k1 = deriv(t, y);
            let mk = |k: &[f64; 7], h: f64| {
                let mut z = y;
                for i in 0..7 {
                    z[i] += h * dt * k[i];
                }
                z
            };
            let k2 = deriv(t + 0.5 * dt, mk(&k1, 0.5));
            let k3 = deriv(t + 0.5 * dt, mk(&k2, 0.5));
            let k4 = deriv(t + dt, mk(&k3, 1.0));
            for i in 0..7 {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += dt;
        }
        out.push(y);
    }
    out
}

#[test]
fn adaptive_integrator_matches_fixed_step_oracle() {
    let p = Model3Params {
        protection: 0.1,
        beta: 1.0,
        latent_time: 3.0,
        quarantine_time: 4.0,
        recovery: [0.05, 0.1, 30.0],
        mortality: Kappa::Constant(0.001),
    };
    let init = SeirqpdState {
        susceptible: 874_880.0,
        insusceptible: 0.0,
        exposed: 80.0,
        infected: 40.0,
        quarantined: 0.0,
        recovered: 0.0,
        dead: 0.0,
    };
    let got = integrate_model3(&p, &init, 90).unwrap();
    let want = oracle_model3(&p, &init, 90);
    for (day, (g, w)) in got.iter().zip(&want).enumerate() {
        let gv = [
            g.susceptible,
            g.insusceptible,
            g.exposed,
            g.infected,
            g.quarantined,
            g.recovered,
            g.dead,
        ];
        for (i, (a, b)) in gv.iter().zip(w).enumerate() {
            let rel = (a - b).abs() / b.abs().max(1.0);
            assert!(rel < 1e-5, "day {day} component {i}: {a} vs {b}");
        }
    }
}

#[test]
fn conservation_across_random_parameter_points() {
    let mut rng = RngSeed::new(2024).rng();
    for point in 0..100 {
        let p = Model3Params {
            protection: rng.random_range(0.0..0.3),
            beta: rng.random_range(0.1..2.0),
            latent_time: rng.random_range(1.0..7.0),
            quarantine_time: rng.random_range(1.0..14.0),
            recovery: [
                rng.random_range(0.0..0.2),
                rng.random_range(0.0..0.5),
                rng.random_range(1.0..100.0),
            ],
            mortality: Kappa::Constant(rng.random_range(0.0..0.01)),
        };
        let n = rng.random_range(1e4..1e6);
        let e0 = rng.random_range(0.0..200.0);
        let i0 = rng.random_range(0.0..200.0);
        let init = SeirqpdState {
            susceptible: n - e0 - i0,
            insusceptible: 0.0,
            exposed: e0,
            infected: i0,
            quarantined: 0.0,
            recovered: 0.0,
            dead: 0.0,
        };
        let traj = integrate_model3(&p, &init, 120).unwrap();
        for (day, state) in traj.iter().enumerate() {
            assert!(
                (state.total() - n).abs() <= 1e-9 * n,
                "point {point} day {day}: drift {}",
                state.total() - n
            );
        }
    }
}
