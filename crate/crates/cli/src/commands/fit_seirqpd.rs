//! `epiwave fit-seirqpd` — least-squares fit of the seven-state model, with
//! the latent-time sensitivity sweep.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args as ClapArgs;
use epiwave_compartmental::{fit_model3, sweep_gamma_inv, Fit3Options, Kappa, Model3Fit};
use epiwave_core::IncidenceSeries;
use serde::Serialize;

use crate::bundle::{cell, BundleWriter};
use crate::config::RunConfig;
use crate::error::AppError;

#[derive(Debug, Clone, ClapArgs)]
pub struct Args {
    /// Input CSV with `date`, `cases`, `recovered`, `deaths`.
    #[arg(long)]
    pub data: PathBuf,

    /// Fixed latent time in days.
    #[arg(long)]
    pub gamma_inv: Option<f64>,

    /// Also sweep the latent time over 1..=7 days.
    #[arg(long, default_value_t = false)]
    pub sweep: bool,

    /// Total population.
    #[arg(long)]
    pub population: Option<f64>,

    /// Multi-start count.
    #[arg(long)]
    pub starts: Option<usize>,

    /// Analysis end date (fit window truncation).
    #[arg(long)]
    pub to: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    gamma_inv: f64,
    params: ParamsOut,
    initial_exposed: f64,
    initial_infected: f64,
    sse: f64,
    re_active: f64,
    re_recovered: f64,
    re_deaths: f64,
    peak_exposed: Peak,
    peak_infected: Peak,
    evaluations: usize,
    sweep: Vec<SweepRow>,
}

#[derive(Debug, Serialize)]
pub struct ParamsOut {
    protection: f64,
    beta: f64,
    latent_time: f64,
    quarantine_time: f64,
    lambda: [f64; 3],
    kappa: f64,
}

#[derive(Debug, Serialize)]
pub struct Peak {
    day_index: usize,
    date: NaiveDate,
    value: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    gamma_inv: f64,
    protection: f64,
    beta: f64,
    quarantine_time: f64,
    sse: f64,
    peak_exposed_value: f64,
    peak_infected_value: f64,
}

fn params_out(fit: &Model3Fit) -> ParamsOut {
    ParamsOut {
        protection: fit.params.protection,
        beta: fit.params.beta,
        latent_time: fit.params.latent_time,
        quarantine_time: fit.params.quarantine_time,
        lambda: fit.params.recovery,
        kappa: match fit.params.mortality {
            Kappa::Constant(k) => k,
            Kappa::Series(_) => f64::NAN,
        },
    }
}

pub fn run(config: &RunConfig, args: &Args) -> Result<(), AppError> {
    let (series, fit, report, effective) = analyze(config, args)?;

    let mut bundle = BundleWriter::create(
        config.out_dir().join("fit-seirqpd"),
        "fit-seirqpd",
        config.seed().value(),
        &effective,
    )?;
    bundle.write_json("report.json", &report)?;
    bundle.write_csv(
        "trajectories.csv",
        &["x", "series", "y", "lower", "upper"],
        &plot_rows(&series, &fit)?,
    )?;
    let hash = bundle.finish()?;
    println!(
        "fit-seirqpd: peak E {:.0} @ {}, peak I {:.0} @ {}, bundle {hash}",
        report.peak_exposed.value,
        report.peak_exposed.date,
        report.peak_infected.value,
        report.peak_infected.date
    );
    Ok(())
}

pub fn analyze(
    config: &RunConfig,
    args: &Args,
) -> Result<(IncidenceSeries, Model3Fit, Report, EffectiveArgs), AppError> {
    let section = &config.fit_seirqpd;
    let to = match &args.to {
        Some(raw) => Some(super::parse_date(raw)?),
        None => None,
    };
    let series = super::load_series(&args.data, false, None, to)?;
    if series.recovered().is_none() || series.deaths().is_none() {
        return Err(AppError::validation(
            "fit-seirqpd needs `recovered` and `deaths` columns",
        ));
    }
    let gamma_inv = RunConfig::value_or(args.gamma_inv, section, "gamma_inv", |v| v.as_float(), 3.0);
    let population = RunConfig::value_or(
        args.population,
        section,
        "population",
        |v| v.as_float(),
        875_000.0,
    );
    let starts = RunConfig::value_or(
        args.starts,
        section,
        "starts",
        |v| v.as_integer().map(|i| i as usize),
        8,
    );

    let opts = Fit3Options {
        population,
        starts,
        seed: config.seed().derive("fit-seirqpd"),
        ..Fit3Options::default()
    };
    let fit = fit_model3(&series, gamma_inv, &opts)?;

    let sweep = if args.sweep {
        let values: Vec<f64> = (1..=7).map(|g| g as f64).collect();
        sweep_gamma_inv(&series, &values, &opts)?
            .into_iter()
            .map(|(g, f)| SweepRow {
                gamma_inv: g,
                protection: f.params.protection,
                beta: f.params.beta,
                quarantine_time: f.params.quarantine_time,
                sse: f.diagnostics.sse,
                peak_exposed_value: f.diagnostics.peak_exposed.1,
                peak_infected_value: f.diagnostics.peak_infected.1,
            })
            .collect()
    } else {
        Vec::new()
    };

    let peak = |pair: (usize, f64)| Peak {
        day_index: pair.0,
        date: series.date_at(pair.0),
        value: pair.1,
    };
    let report = Report {
        gamma_inv,
        params: params_out(&fit),
        initial_exposed: fit.initial.exposed,
        initial_infected: fit.initial.infected,
        sse: fit.diagnostics.sse,
        re_active: fit.diagnostics.re_active,
        re_recovered: fit.diagnostics.re_recovered,
        re_deaths: fit.diagnostics.re_deaths,
        peak_exposed: peak(fit.diagnostics.peak_exposed),
        peak_infected: peak(fit.diagnostics.peak_infected),
        evaluations: fit.diagnostics.evaluations,
        sweep,
    };
    let effective = EffectiveArgs {
        data: args.data.clone(),
        gamma_inv,
        sweep: args.sweep,
        population,
        starts,
        to: series.date_at(series.len()),
    };
    Ok((series, fit, report, effective))
}

#[derive(Debug, Serialize)]
pub struct EffectiveArgs {
    data: PathBuf,
    gamma_inv: f64,
    sweep: bool,
    population: f64,
    starts: usize,
    to: NaiveDate,
}

pub fn plot_rows(series: &IncidenceSeries, fit: &Model3Fit) -> Result<Vec<Vec<String>>, AppError> {
    let traj = fit.trajectory(series.len() - 1)?;
    let (q_obs, r_obs, d_obs) = observed(series);
    let mut rows = Vec::new();
    for t in 1..=series.len() {
        let date = series.date_at(t).to_string();
        let s = &traj[t - 1];
        let pairs = [
            ("active_observed", q_obs[t - 1]),
            ("active_fitted", s.quarantined),
            ("recovered_observed", r_obs[t - 1]),
            ("recovered_fitted", s.recovered),
            ("deaths_observed", d_obs[t - 1]),
            ("deaths_fitted", s.dead),
            ("exposed_hidden", s.exposed),
            ("infectious_hidden", s.infected),
        ];
        for (name, value) in pairs {
            rows.push(vec![
                date.clone(),
                name.into(),
                cell(value),
                String::new(),
                String::new(),
            ]);
        }
    }
    Ok(rows)
}

fn observed(series: &IncidenceSeries) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let recovered = series.recovered().unwrap_or(&[]);
    let deaths = series.deaths().unwrap_or(&[]);
    let (mut cc, mut cr, mut cd) = (0.0, 0.0, 0.0);
    let mut q = Vec::new();
    let mut r = Vec::new();
    let mut d = Vec::new();
    for t in 0..series.len() {
        cc += series.cases()[t] as f64;
        cr += recovered.get(t).copied().unwrap_or(0) as f64;
        cd += deaths.get(t).copied().unwrap_or(0) as f64;
        q.push((cc - cr - cd).max(0.0));
        r.push(cr);
        d.push(cd);
    }
    (q, r, d)
}
