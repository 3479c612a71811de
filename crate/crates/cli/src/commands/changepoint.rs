//! `epiwave changepoint` — detection, segment refit, week-ahead forecast.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args as ClapArgs;
use epiwave_changepoint::{
    forecast_cpt, isolate_detect, ChangePointResult, IdConfig, SigmaEstimator, SignalModel,
};
use epiwave_core::IncidenceSeries;
use serde::Serialize;

use crate::bundle::{cell, BundleWriter};
use crate::config::RunConfig;
use crate::error::AppError;

#[derive(Debug, Clone, ClapArgs)]
pub struct Args {
    /// Input CSV with `date` and `cases` columns.
    #[arg(long)]
    pub data: PathBuf,

    /// Signal model: `constant` or `linear`.
    #[arg(long)]
    pub model: Option<String>,

    /// Interval expansion step in days.
    #[arg(long)]
    pub lambda: Option<usize>,

    /// Detection threshold, or `auto`.
    #[arg(long)]
    pub threshold: Option<String>,

    /// Forecast horizon in days.
    #[arg(long)]
    pub forecast: Option<usize>,

    /// Interval coverage level.
    #[arg(long)]
    pub level: Option<f64>,

    /// Use the local-transmission column instead of all cases.
    #[arg(long, default_value_t = false)]
    pub local_only: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub model: String,
    pub threshold: f64,
    pub locations: Vec<Location>,
    pub segments: Vec<Segment>,
    pub forecasts: Vec<epiwave_core::PredictionInterval>,
}

#[derive(Debug, Serialize)]
pub struct Location {
    index: usize,
    date: NaiveDate,
}

#[derive(Debug, Serialize)]
pub struct Segment {
    start_index: usize,
    end_index: usize,
    start_date: NaiveDate,
    end_date: NaiveDate,
    intercept: f64,
    slope: f64,
    /// Mean level of the fitted signal over the segment.
    level: f64,
}

pub fn run(config: &RunConfig, args: &Args) -> Result<(), AppError> {
    let series = super::load_series(&args.data, args.local_only, None, None)?;
    let (result, report, effective) = analyze(config, args, &series)?;

    let mut bundle = BundleWriter::create(
        config.out_dir().join("changepoint"),
        "changepoint",
        config.seed().value(),
        &effective,
    )?;
    bundle.write_json("report.json", &report)?;
    bundle.write_csv(
        "signal.csv",
        &["x", "series", "y", "lower", "upper"],
        &plot_rows(&series, &result, &report.forecasts),
    )?;
    let hash = bundle.finish()?;
    println!("changepoint: {} change-points, bundle {hash}", result.locations.len());
    Ok(())
}

/// Shared by `report-all`.
pub fn analyze(
    config: &RunConfig,
    args: &Args,
    series: &IncidenceSeries,
) -> Result<(ChangePointResult, Report, EffectiveArgs), AppError> {
    let section = &config.changepoint;
    let model_name = RunConfig::value_or(
        args.model.clone(),
        section,
        "model",
        |v| v.as_str().map(str::to_string),
        "linear".to_string(),
    );
    let model = match model_name.as_str() {
        "constant" => SignalModel::PiecewiseConstant,
        "linear" => SignalModel::ContinuousPiecewiseLinear,
        other => {
            return Err(AppError::validation(format!(
                "model must be `constant` or `linear`, got `{other}`"
            )))
        }
    };
    let lambda = RunConfig::value_or(
        args.lambda,
        section,
        "lambda",
        |v| v.as_integer().map(|i| i as usize),
        10,
    );
    let threshold_raw = RunConfig::value_or(
        args.threshold.clone(),
        section,
        "threshold",
        |v| v.as_str().map(str::to_string),
        "auto".to_string(),
    );
    let threshold = match threshold_raw.as_str() {
        "auto" => None,
        other => Some(other.parse::<f64>().map_err(|_| {
            AppError::validation(format!("threshold must be `auto` or a number, got `{other}`"))
        })?),
    };
    let horizon = RunConfig::value_or(
        args.forecast,
        section,
        "forecast",
        |v| v.as_integer().map(|i| i as usize),
        7,
    );
    let level = RunConfig::value_or(args.level, section, "level", |v| v.as_float(), 0.95);

    let cfg = IdConfig {
        lambda,
        threshold,
        sigma: SigmaEstimator::Mad,
    };
    let mut result = isolate_detect(series, model, &cfg)?;
    let forecasts = if horizon > 0 {
        forecast_cpt(&result, horizon, level)?
    } else {
        Vec::new()
    };
    result = result.with_forecasts(forecasts.clone());

    let report = Report {
        model: model_name.clone(),
        threshold: result.threshold,
        locations: result
            .locations
            .iter()
            .map(|&r| Location {
                index: r,
                date: series.date_at(r),
            })
            .collect(),
        segments: result
            .segment_params
            .iter()
            .map(|seg| Segment {
                start_index: seg.start,
                end_index: seg.end,
                start_date: series.date_at(seg.start),
                end_date: series.date_at(seg.end),
                intercept: seg.intercept,
                slope: seg.slope,
                level: (seg.start..=seg.end).map(|t| seg.value_at(t)).sum::<f64>()
                    / seg.len() as f64,
            })
            .collect(),
        forecasts,
    };
    let effective = EffectiveArgs {
        data: args.data.clone(),
        model: model_name,
        lambda,
        threshold: threshold_raw,
        forecast: horizon,
        level,
        local_only: args.local_only,
    };
    Ok((result, report, effective))
}

#[derive(Debug, Serialize)]
pub struct EffectiveArgs {
    data: PathBuf,
    model: String,
    lambda: usize,
    threshold: String,
    forecast: usize,
    level: f64,
    local_only: bool,
}

pub fn plot_rows(
    series: &IncidenceSeries,
    result: &ChangePointResult,
    forecasts: &[epiwave_core::PredictionInterval],
) -> Vec<Vec<String>> {
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
            cell(result.fitted[t - 1]),
            String::new(),
            String::new(),
        ]);
    }
    for pi in forecasts {
        let date = series.date_at(series.len()) + chrono::Days::new(pi.horizon_day as u64);
        rows.push(vec![
            date.to_string(),
            "forecast".into(),
            cell(pi.point),
            cell(pi.lower),
            cell(pi.upper),
        ]);
    }
    rows
}
