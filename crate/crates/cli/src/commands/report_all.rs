//! `epiwave report-all` — the full pipeline over one dataset: both
//! change-point models, the count model with intervention scan and forecast,
//! the seven-state fit with its sensitivity sweep, and all four
//! reproduction-number methods.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use serde::Serialize;

use crate::bundle::BundleWriter;
use crate::config::RunConfig;
use crate::error::AppError;

use super::{changepoint, countts, fit_seirqpd, rt};

#[derive(Debug, Clone, ClapArgs)]
pub struct Args {
    /// Incidence CSV with `date,cases,local,recovered,deaths`.
    #[arg(long)]
    pub data: PathBuf,

    /// Wide per-district local-transmission CSV (for the ensemble method).
    #[arg(long)]
    pub district_data: Option<PathBuf>,

    /// Mobility matrix CSV.
    #[arg(long)]
    pub mobility: Option<PathBuf>,

    /// District populations CSV.
    #[arg(long)]
    pub districts: Option<PathBuf>,

    /// Count-model analysis start date.
    #[arg(long)]
    pub countts_from: Option<String>,
}

#[derive(Debug, Serialize)]
struct Summary {
    changepoint_linear: serde_json::Value,
    changepoint_constant: serde_json::Value,
    countts: serde_json::Value,
    fit_seirqpd: serde_json::Value,
    rt_mcmc1: serde_json::Value,
    rt_bettencourt: serde_json::Value,
    rt_cori: serde_json::Value,
    rt_eakf2: Option<serde_json::Value>,
}

pub fn run(config: &RunConfig, args: &Args) -> Result<(), AppError> {
    let effective = EffectiveArgs {
        data: args.data.clone(),
        seed: config.seed().value(),
    };
    let mut bundle = BundleWriter::create(
        config.out_dir().join("report-all"),
        "report-all",
        config.seed().value(),
        &effective,
    )?;



    fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value, AppError> {
        serde_json::to_value(v).map_err(|e| AppError::estimation(format!("serialize: {e}")))
    }

    // Change-point analysis, both signal models.
    let series = super::load_series(&args.data, false, None, None)?;
    let mut cp_values = Vec::new();
    for model in ["linear", "constant"] {
        let cp_args = changepoint::Args {
            data: args.data.clone(),
            model: Some(model.to_string()),
            lambda: None,
            threshold: None,
            forecast: Some(7),
            level: Some(0.95),
            local_only: false,
        };
        let (result, report, _) = changepoint::analyze(config, &cp_args, &series)?;
        bundle.write_csv(
            &format!("changepoint-{model}.csv"),
            &["x", "series", "y", "lower", "upper"],
            &changepoint::plot_rows(&series, &result, &report.forecasts),
        )?;
        cp_values.push(to_value(&report)?);
    }

    // Count time-series analysis.
    let ct_args = countts::Args {
        data: args.data.clone(),
        detect: Some("ao".into()),
        level: Some(0.05),
        forecast: Some(7),
        paths: Some(10_000),
        from: args.countts_from.clone(),
        to: None,
        local_only: false,
    };
    let (_, ct_report, _, _) = countts::analyze(config, &ct_args)?;
    let ct_value = to_value(&ct_report)?;

    // Seven-state fit with the sweep.
    let fit_args = fit_seirqpd::Args {
        data: args.data.clone(),
        gamma_inv: Some(3.0),
        sweep: true,
        population: None,
        starts: None,
        to: None,
    };
    let (fit_series, fit, fit_report, _) = fit_seirqpd::analyze(config, &fit_args)?;
    bundle.write_csv(
        "seirqpd.csv",
        &["x", "series", "y", "lower", "upper"],
        &fit_seirqpd::plot_rows(&fit_series, &fit)?,
    )?;
    let fit_value = to_value(&fit_report)?;

    // Reproduction number, all methods that have the inputs.
    let rt_run = |method: &str, local: bool| -> Result<serde_json::Value, AppError> {
        let rt_args = rt::Args {
            method: method.into(),
            data: args.data.clone(),
            mobility: None,
            districts: None,
            local_only: local,
            dump_samples: false,
            lockdown: None,
        };
        to_value(&rt::analyze(config, &rt_args)?)
    };
    let rt_mcmc1 = rt_run("mcmc1", false)?;
    let rt_bett = rt_run("bettencourt", true)?;
    let rt_cori = rt_run("cori", true)?;
    let rt_eakf = match (&args.district_data, &args.mobility, &args.districts) {
        (Some(dd), Some(m), Some(d)) => {
            let rt_args = rt::Args {
                method: "eakf2".into(),
                data: dd.clone(),
                mobility: Some(m.clone()),
                districts: Some(d.clone()),
                local_only: false,
                dump_samples: false,
                lockdown: None,
            };
            Some(to_value(&rt::analyze(config, &rt_args)?)?)
        }
        _ => None,
    };

    let summary = Summary {
        changepoint_linear: cp_values.remove(0),
        changepoint_constant: cp_values.remove(0),
        countts: ct_value,
        fit_seirqpd: fit_value,
        rt_mcmc1,
        rt_bettencourt: rt_bett,
        rt_cori,
        rt_eakf2: rt_eakf,
    };
    bundle.write_json("summary.json", &summary)?;
    let hash = bundle.finish()?;
    println!("report-all: bundle {hash}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct EffectiveArgs {
    data: PathBuf,
    seed: u64,
}
