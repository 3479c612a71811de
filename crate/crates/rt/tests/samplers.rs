//! Sampler-level validation: prior recovery under a flat likelihood, a
//! grid-integration oracle for the single-parameter posterior, and
//! determinism/shape checks for the ensemble filter.

use chrono::NaiveDate;
use epiwave_compartmental::{run_model1_expected, Model1Params, SeirState};
use epiwave_core::{IncidenceSeries, MobilityMatrix, RngSeed};
use epiwave_rt::{
    default_prior_schedule, eakf_model2, mcmc_model1, BetaPrior, EnsembleConfig, McmcOptions,
    PriorSpec, TransmissionPrior,
};

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

#[test]
fn flat_likelihood_returns_the_prior() {
    // Infinite observation variance: the sampler must return iid prior
    // draws, so all first and second moments of (alpha, beta) match the
    // analytic prior moments within Monte Carlo error.
    let data = IncidenceSeries::new(date(2020, 3, 4), vec![3; 14], "flat").unwrap();
    let prior = PriorSpec {
        alpha: BetaPrior { shape1: 2.0, shape2: 2.0 },
        beta: TransmissionPrior::Gamma { shape: 1.5, rate: 1.5 },
        init_max: 10,
    };
    let opts = McmcOptions {
        variance_override: Some(f64::INFINITY),
        ..McmcOptions::default()
    };
    let out = mcmc_model1(&data, &[prior], RngSeed::new(1234), &opts).unwrap();
    let samples = &out.alpha_beta[0];
    assert_eq!(samples.len(), 8000);
    assert!(out.acceptance_rates[0] > 0.999, "flat likelihood accepts everything");

    let n = samples.len() as f64;
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| samples.iter().map(f).sum::<f64>() / n;
    let a_mean = mean(&|s| s.0);
    let a_var = mean(&|s| (s.0 - a_mean) * (s.0 - a_mean));
    let b_mean = mean(&|s| s.1);
    let b_var = mean(&|s| (s.1 - b_mean) * (s.1 - b_mean));

    let checks = [
        ("alpha mean", a_mean, prior.alpha.mean(), (prior.alpha.variance() / n).sqrt()),
        ("beta mean", b_mean, prior.beta.mean(), (prior.beta.variance() / n).sqrt()),
    ];
    for (name, got, want, se) in checks {
        assert!(
            (got - want).abs() <= 3.0 * se,
            "{name}: {got} vs {want} (3 s.e. = {})",
            3.0 * se
        );
    }
    // Variances: compare within 3 standard errors of a sample variance,
    // approximated by var * sqrt(2/(n-1)) for these light-tailed priors.
    for (name, got, want) in [("alpha var", a_var, prior.alpha.variance()), ("beta var", b_var, prior.beta.variance())] {
        let se = want * (2.0 / (n - 1.0)).sqrt() * 2.0; // inflate for skew
        assert!(
            (got - want).abs() <= 3.0 * se,
            "{name}: {got} vs {want} (3 s.e. = {})",
            3.0 * se
        );
    }
}

#[test]
fn single_parameter_posterior_matches_grid_oracle() {
    // One fortnight, alpha and the initial seeding frozen, so the posterior
    // over beta is one-dimensional and can be integrated on a grid.
    let alpha = 0.6;
    let init = (6.0, 4.0);
    let opts = McmcOptions {
        fixed_alpha: Some(alpha),
        fixed_init: Some(init),
        n_steps: 60_000,
        burn_in: 4_000,
        ..McmcOptions::default()
    };
    // Synthetic observations from a known transmission rate.
    let true_beta = 0.9;
    let params = Model1Params {
        beta: true_beta,
        mu: opts.mu,
        latency: opts.latency,
        infectious: opts.infectious,
        alpha,
        delay_mean: opts.delay_mean,
        delay_shape: opts.delay_shape,
    };
    let state = SeirState::seeded(opts.population, init.0, init.1);
    let run = run_model1_expected(&params, &state, &[], 14).unwrap();
    let observed: Vec<u64> = run.recorded.iter().map(|&v| (v * 3.0).round() as u64).collect();
    let data = IncidenceSeries::new(date(2020, 3, 4), observed.clone(), "toy").unwrap();

    let prior = PriorSpec {
        alpha: BetaPrior { shape1: 2.0, shape2: 2.0 },
        beta: TransmissionPrior::Exponential { rate: 1.0 },
        init_max: 10,
    };
    let out = mcmc_model1(&data, &[prior], RngSeed::new(77), &opts).unwrap();
    let mut draws: Vec<f64> = out.alpha_beta[0].iter().map(|s| s.1).collect();
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Grid oracle: posterior ~ prior(beta) * L(beta) on 2000 points.
    let y: Vec<f64> = observed.iter().map(|&c| c as f64).collect();
    let sigma2: Vec<f64> = y.iter().map(|v| (v * v / 4.0).max(1.0)).collect();
    let grid: Vec<f64> = (0..2000).map(|i| 8.0 * (i as f64 + 0.5) / 2000.0).collect();
    let log_post: Vec<f64> = grid
        .iter()
        .map(|&beta| {
            let p = Model1Params { beta, ..params };
            let sim = run_model1_expected(&p, &state, &[], 14).unwrap().recorded;
            let ll: f64 = y
                .iter()
                .zip(&sim)
                .zip(&sigma2)
                .map(|((yo, ys), s2)| -(yo - ys) * (yo - ys) / (2.0 * s2))
                .sum();
            ll - beta // Exponential(1) log prior
        })
        .collect();
    let max = log_post.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let weights: Vec<f64> = log_post.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = weights.iter().sum();

    // Kolmogorov-Smirnov distance between the sampler's empirical CDF and
    // the grid CDF.
    let mut ks: f64 = 0.0;
    let mut cum = 0.0;
    let mut draw_idx = 0usize;
    for (g, w) in grid.iter().zip(&weights) {
        cum += w / total;
        while draw_idx < draws.len() && draws[draw_idx] <= *g {
            draw_idx += 1;
        }
        let empirical = draw_idx as f64 / draws.len() as f64;
        ks = ks.max((empirical - cum).abs());
    }
    assert!(ks < 0.02, "Kolmogorov-Smirnov distance {ks}");
}

#[test]
fn mcmc_is_deterministic_under_a_fixed_seed() {
    let cases: Vec<u64> = (0..28).map(|i| [0, 1, 0, 2, 3, 2, 5, 4][i % 8]).collect();
    let data = IncidenceSeries::new(date(2020, 3, 4), cases, "det").unwrap();
    let priors = default_prior_schedule(2);
    let opts = McmcOptions { n_steps: 2000, burn_in: 500, ..McmcOptions::default() };
    let a = mcmc_model1(&data, &priors, RngSeed::new(5), &opts).unwrap();
    let b = mcmc_model1(&data, &priors, RngSeed::new(5), &opts).unwrap();
    for (x, y) in a.alpha_beta[1].iter().zip(&b.alpha_beta[1]) {
        assert_eq!(x, y);
    }
    assert_eq!(a.estimates[0].median, b.estimates[0].median);
}

#[test]
fn eakf_produces_weekly_estimates_and_is_deterministic() {
    // Two synthetic districts with a growing then declining outbreak.
    let make = |scale: u64| -> IncidenceSeries {
        let counts: Vec<u64> = (0..56)
            .map(|t| {
                let x = t as f64;
                let hump = (x / 8.0).min((56.0 - x) / 16.0).max(0.0);
                (scale as f64 * hump) as u64
            })
            .collect();
        IncidenceSeries::new(date(2020, 3, 5), counts, "district").unwrap()
    };
    let data = vec![make(6), make(3)];
    let populations = vec![300_000.0, 150_000.0];
    let mobility = MobilityMatrix::new(
        vec!["a".into(), "b".into()],
        vec![vec![0.0, 900.0], vec![700.0, 0.0]],
    )
    .unwrap();
    let cfg = EnsembleConfig { n_members: 120, ..EnsembleConfig::default() };
    let lockdown = date(2020, 3, 24);
    let run1 = eakf_model2(&data, &populations, &mobility, lockdown, &cfg, RngSeed::new(31)).unwrap();
    let run2 = eakf_model2(&data, &populations, &mobility, lockdown, &cfg, RngSeed::new(31)).unwrap();
    assert!(!run1.weekly.is_empty());
    for (a, b) in run1.weekly.iter().zip(&run2.weekly) {
        assert_eq!(a.median, b.median);
        assert_eq!(a.ci95, b.ci95);
    }
    for e in &run1.weekly {
        assert!(e.ci95.0 <= e.median && e.median <= e.ci95.1);
        assert!((e.recompute_prob_below_one() - e.prob_below_one).abs() < 1e-15);
        assert!(e.median.is_finite() && e.median >= 0.0);
    }
}
