//! `epiwave rt` — effective reproduction number by four methods.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args as ClapArgs;
use epiwave_core::{DistrictTable, MobilityMatrix, RngSeed};
use epiwave_rt::{
    bettencourt_rt, cori_rt, default_prior_schedule, eakf_model2, mcmc_model1, BettencourtOptions,
    CoriOptions, DailyRt, EnsembleConfig, McmcOptions, RtEstimate,
};
use serde::Serialize;

use crate::bundle::{cell, BundleWriter};
use crate::config::RunConfig;
use crate::error::AppError;

#[derive(Debug, Clone, ClapArgs)]
pub struct Args {
    /// Method: `mcmc1`, `eakf2`, `bettencourt`, or `cori`.
    #[arg(long)]
    pub method: String,

    /// Incidence CSV (for `eakf2`: the wide per-district file).
    #[arg(long)]
    pub data: PathBuf,

    /// Mobility matrix CSV (`eakf2`).
    #[arg(long)]
    pub mobility: Option<PathBuf>,

    /// District populations CSV (`eakf2`).
    #[arg(long)]
    pub districts: Option<PathBuf>,

    /// Use the local-transmission column.
    #[arg(long, default_value_t = false)]
    pub local_only: bool,

    /// Include raw posterior samples in the report.
    #[arg(long, default_value_t = false)]
    pub dump_samples: bool,

    /// Lockdown date for the ensemble method's transmission re-draw.
    #[arg(long)]
    pub lockdown: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct PeriodOut {
    start: NaiveDate,
    end: NaiveDate,
    median: f64,
    lower: f64,
    upper: f64,
    prob_below_one: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    method: String,
    periods: Vec<PeriodOut>,
    undefined_periods: Vec<String>,
    warnings: Vec<String>,
}

pub fn run(config: &RunConfig, args: &Args) -> Result<(), AppError> {
    let report = analyze(config, args)?;
    let effective = EffectiveArgs {
        method: args.method.clone(),
        data: args.data.clone(),
        local_only: args.local_only,
        seed: config.seed().value(),
    };
    let mut bundle = BundleWriter::create(
        config.out_dir().join(format!("rt-{}", args.method)),
        "rt",
        config.seed().value(),
        &effective,
    )?;
    bundle.write_json("report.json", &report)?;
    let rows: Vec<Vec<String>> = report
        .periods
        .iter()
        .map(|p| {
            vec![
                p.start.to_string(),
                report.method.clone(),
                cell(p.median),
                cell(p.lower),
                cell(p.upper),
            ]
        })
        .collect();
    bundle.write_csv("rt.csv", &["x", "series", "y", "lower", "upper"], &rows)?;
    let hash = bundle.finish()?;
    println!("rt {}: {} periods, bundle {hash}", report.method, report.periods.len());
    Ok(())
}

pub fn analyze(config: &RunConfig, args: &Args) -> Result<Report, AppError> {
    let seed = config.seed().derive("rt");
    match args.method.as_str() {
        "mcmc1" => mcmc(config, args, seed),
        "eakf2" => eakf(config, args, seed),
        "bettencourt" => bettencourt(config, args),
        "cori" => cori(config, args),
        other => Err(AppError::validation(format!(
            "method must be one of mcmc1, eakf2, bettencourt, cori; got `{other}`"
        ))),
    }
}

fn period_out(e: &RtEstimate, dump: bool) -> PeriodOut {
    PeriodOut {
        start: e.period_start,
        end: e.period_end,
        median: e.median,
        lower: e.ci95.0,
        upper: e.ci95.1,
        prob_below_one: e.prob_below_one,
        samples: if dump {
            match &e.posterior {
                epiwave_rt::RtPosterior::Samples(s) => Some(s.clone()),
                _ => None,
            }
        } else {
            None
        },
    }
}

/// Fortnightly posteriors; the analysis starts three days before the first
/// recorded case, as many whole fortnights as the data allows (capped at 6).
fn mcmc(_config: &RunConfig, args: &Args, seed: RngSeed) -> Result<Report, AppError> {
    let series = super::load_series(&args.data, args.local_only, None, None)?;
    let first = series
        .first_case_index()
        .ok_or_else(|| AppError::validation("series has no cases"))?;
    let start = first.saturating_sub(3).max(1);
    let analysis = series.slice(start, series.len())?;
    let opts = McmcOptions::default();
    let n_periods = (analysis.len() / opts.period_days).min(6);
    if n_periods == 0 {
        return Err(AppError::validation(format!(
            "need at least {} days after the analysis start",
            opts.period_days
        )));
    }
    let priors = default_prior_schedule(n_periods);
    let out = mcmc_model1(&analysis, &priors, seed.derive("mcmc1"), &opts)?;
    Ok(Report {
        method: "mcmc1".into(),
        periods: out
            .estimates
            .iter()
            .map(|e| period_out(e, args.dump_samples))
            .collect(),
        undefined_periods: Vec::new(),
        warnings: out.warnings,
    })
}

fn eakf(config: &RunConfig, args: &Args, seed: RngSeed) -> Result<Report, AppError> {
    let mobility_path = args
        .mobility
        .as_ref()
        .ok_or_else(|| AppError::validation("eakf2 needs --mobility"))?;
    let districts_path = args
        .districts
        .as_ref()
        .ok_or_else(|| AppError::validation("eakf2 needs --districts"))?;
    let mobility = MobilityMatrix::load(mobility_path)?;
    let table = DistrictTable::load(districts_path)?;
    let (names, series) = super::load_district_series(&args.data)?;
    if names != table.names || names != mobility.districts() {
        return Err(AppError::validation(format!(
            "district names disagree between files: data {names:?}, table {:?}, mobility {:?}",
            table.names,
            mobility.districts()
        )));
    }
    let lockdown = match &args.lockdown {
        Some(raw) => super::parse_date(raw)?,
        None => NaiveDate::from_ymd_opt(2020, 3, 24).expect("valid date"),
    };
    let cfg = EnsembleConfig::default();
    let out = eakf_model2(
        &series,
        &table.populations,
        &mobility,
        lockdown,
        &cfg,
        seed.derive("eakf2"),
    )?;
    let _ = config;
    Ok(Report {
        method: "eakf2".into(),
        periods: out
            .weekly
            .iter()
            .map(|e| period_out(e, args.dump_samples))
            .collect(),
        undefined_periods: Vec::new(),
        warnings: out.warnings,
    })
}

fn bettencourt(config: &RunConfig, args: &Args) -> Result<Report, AppError> {
    let series = super::load_series(&args.data, args.local_only, None, None)?;
    let opts = BettencourtOptions::default();
    let out = bettencourt_rt(&series, &opts)?;
    let _ = config;
    let mut periods = Vec::new();
    let mut undefined = Vec::new();
    for day in out {
        match day {
            DailyRt::Estimate(e) => periods.push(period_out(&e, false)),
            DailyRt::InsufficientSignal { date } => undefined.push(date.to_string()),
        }
    }
    Ok(Report {
        method: "bettencourt".into(),
        periods,
        undefined_periods: undefined,
        warnings: Vec::new(),
    })
}

fn cori(config: &RunConfig, args: &Args) -> Result<Report, AppError> {
    let series = super::load_series(&args.data, args.local_only, None, None)?;
    let opts = CoriOptions::default();
    let out = cori_rt(&series, &opts)?;
    let _ = config;
    let mut periods = Vec::new();
    let mut undefined = Vec::new();
    for week in out {
        match week {
            epiwave_rt::WeeklyRt::Estimate(e) => periods.push(period_out(&e, false)),
            epiwave_rt::WeeklyRt::Undefined { start, end } => {
                undefined.push(format!("{start}..{end}"))
            }
        }
    }
    Ok(Report {
        method: "cori".into(),
        periods,
        undefined_periods: undefined,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Serialize)]
struct EffectiveArgs {
    method: String,
    data: PathBuf,
    local_only: bool,
    seed: u64,
}
