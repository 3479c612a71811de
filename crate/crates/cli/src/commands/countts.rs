//! `epiwave countts` — log-linear count model: fit, scan, forecast.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args as ClapArgs;
use epiwave_core::IncidenceSeries;
use epiwave_countts::{
    detect_interventions, fit_mle, predict_counts, DetectionOptions, FitOptions, FitReport,
    InterventionKind,
};
use serde::Serialize;

use crate::bundle::{cell, BundleWriter};
use crate::config::RunConfig;
use crate::error::AppError;

#[derive(Debug, Clone, ClapArgs)]
pub struct Args {
    /// Input CSV with `date` and `cases` columns.
    #[arg(long)]
    pub data: PathBuf,

    /// Comma-separated intervention kinds to scan: `ao`, `ts`, `ls`.
    #[arg(long)]
    pub detect: Option<String>,

    /// Familywise significance level of the scan.
    #[arg(long)]
    pub level: Option<f64>,

    /// Forecast horizon in days (0 disables).
    #[arg(long)]
    pub forecast: Option<usize>,

    /// Simulated forecast paths.
    #[arg(long)]
    pub paths: Option<usize>,

    /// Analysis start date (defaults to the file start).
    #[arg(long)]
    pub from: Option<String>,

    /// Analysis end date (defaults to the file end).
    #[arg(long)]
    pub to: Option<String>,

    #[arg(long, default_value_t = false)]
    pub local_only: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    start_date: NaiveDate,
    n_obs: usize,
    null_fit: FitSummary,
    final_fit: FitSummary,
    interventions: Vec<InterventionSummary>,
    forecasts: Vec<epiwave_core::PredictionInterval>,
    forecast_level: f64,
}

#[derive(Debug, Serialize)]
pub struct FitSummary {
    intercept: f64,
    feedback: f64,
    obs_coeff: f64,
    std_errors: Vec<f64>,
    loglik: f64,
    bic: f64,
    converged: bool,
    boundary: bool,
}

#[derive(Debug, Serialize)]
pub struct InterventionSummary {
    time_index: usize,
    date: NaiveDate,
    kind: String,
    size: f64,
    p_value: f64,
}

impl FitSummary {
    fn from_report(report: &FitReport) -> Self {
        Self {
            intercept: report.model.intercept,
            feedback: report.model.feedback,
            obs_coeff: report.model.obs_coeff,
            std_errors: report.std_errors.clone(),
            loglik: report.loglik,
            bic: report.bic,
            converged: report.converged,
            boundary: report.boundary,
        }
    }
}

pub fn run(config: &RunConfig, args: &Args) -> Result<(), AppError> {
    let (series, report, fit, effective) = analyze(config, args)?;

    let mut bundle = BundleWriter::create(
        config.out_dir().join("countts"),
        "countts",
        config.seed().value(),
        &effective,
    )?;
    bundle.write_json("report.json", &report)?;
    let mut rows = Vec::new();
    for t in 1..=series.len() {
        let date = series.date_at(t).to_string();
        rows.push(vec![
            date.clone(),
            "observed".into(),
            cell(series.cases()[t - 1] as f64),
            String::new(),
            String::new(),
        ]);
        rows.push(vec![
            date,
            "fitted".into(),
            cell(fit.fitted_means[t - 1]),
            String::new(),
            String::new(),
        ]);
    }
    for pi in &report.forecasts {
        let date = series.date_at(series.len()) + chrono::Days::new(pi.horizon_day as u64);
        rows.push(vec![
            date.to_string(),
            "forecast".into(),
            cell(pi.point),
            cell(pi.lower),
            cell(pi.upper),
        ]);
    }
    bundle.write_csv("fit.csv", &["x", "series", "y", "lower", "upper"], &rows)?;
    let hash = bundle.finish()?;
    println!(
        "countts: {} interventions, BIC {:.3}, bundle {hash}",
        report.interventions.len(),
        report.final_fit.bic
    );
    Ok(())
}

pub fn analyze(
    config: &RunConfig,
    args: &Args,
) -> Result<(IncidenceSeries, Report, FitReport, EffectiveArgs), AppError> {
    let section = &config.countts;
    let from = match &args.from {
        Some(raw) => Some(super::parse_date(raw)?),
        None => section
            .get("from")
            .and_then(|v| v.as_str())
            .map(super::parse_date)
            .transpose()?,
    };
    let to = match &args.to {
        Some(raw) => Some(super::parse_date(raw)?),
        None => None,
    };
    let series = super::load_series(&args.data, args.local_only, from, to)?;

    let kinds_raw = RunConfig::value_or(
        args.detect.clone(),
        section,
        "detect",
        |v| v.as_str().map(str::to_string),
        "ao".to_string(),
    );
    let kinds = parse_kinds(&kinds_raw)?;
    let level = RunConfig::value_or(args.level, section, "level", |v| v.as_float(), 0.05);
    let horizon = RunConfig::value_or(
        args.forecast,
        section,
        "forecast",
        |v| v.as_integer().map(|i| i as usize),
        7,
    );
    let n_paths = RunConfig::value_or(
        args.paths,
        section,
        "paths",
        |v| v.as_integer().map(|i| i as usize),
        10_000,
    );

    let null_fit = fit_mle(&series, &[], &FitOptions::default())?;
    let opts = DetectionOptions {
        level,
        ..DetectionOptions::default()
    };
    let (detected, final_fit) = detect_interventions(&series, &kinds, &opts)?;

    let forecasts = if horizon > 0 {
        predict_counts(
            &final_fit,
            &series,
            horizon,
            0.95,
            config.seed().derive("countts"),
            n_paths,
        )?
    } else {
        Vec::new()
    };

    let report = Report {
        start_date: series.start_date(),
        n_obs: series.len(),
        null_fit: FitSummary::from_report(&null_fit),
        final_fit: FitSummary::from_report(&final_fit),
        interventions: detected
            .iter()
            .map(|d| InterventionSummary {
                time_index: d.time,
                date: series.date_at(d.time),
                kind: d.kind.label().to_string(),
                size: d.size,
                p_value: d.p_value,
            })
            .collect(),
        forecasts,
        forecast_level: 0.95,
    };
    let effective = EffectiveArgs {
        data: args.data.clone(),
        detect: kinds_raw,
        level,
        forecast: horizon,
        paths: n_paths,
        from: series.start_date(),
        local_only: args.local_only,
    };
    Ok((series, report, final_fit, effective))
}

fn parse_kinds(raw: &str) -> Result<Vec<InterventionKind>, AppError> {
    raw.split(',')
        .map(|token| match token.trim() {
            "ao" => Ok(InterventionKind::AdditiveOutlier),
            "ts" => Ok(InterventionKind::TransientShift { decay: 0.8 }),
            "ls" => Ok(InterventionKind::LevelShift),
            other => Err(AppError::validation(format!(
                "unknown intervention kind `{other}` (expected ao, ts, ls)"
            ))),
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct EffectiveArgs {
    data: PathBuf,
    detect: String,
    level: f64,
    forecast: usize,
    paths: usize,
    from: NaiveDate,
    local_only: bool,
}
