//! Subcommand implementations.

pub mod changepoint;
pub mod countts;
pub mod fit_seirqpd;
pub mod report_all;
pub mod rt;
pub mod simulate;

use chrono::NaiveDate;
use epiwave_core::{ColumnSchema, IncidenceSeries};

use crate::error::AppError;

/// Loads a single incidence series, optionally from the local-transmission
/// column and optionally sliced to a date range.
pub fn load_series(
    path: &std::path::Path,
    local_only: bool,
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
) -> Result<IncidenceSeries, AppError> {
    let mut schema = ColumnSchema::default();
    if local_only {
        schema.cases = "local".to_string();
    }
    let series = IncidenceSeries::load(path, &schema)?;
    if series.cases().iter().all(|&c| c == 0) {
        return Err(AppError::validation(format!(
            "{} has no cases in column `{}`",
            path.display(),
            schema.cases
        )));
    }
    let from = from.unwrap_or_else(|| series.start_date());
    let to = to.unwrap_or_else(|| series.date_at(series.len()));
    Ok(series.slice_dates(from, to)?)
}

/// Loads the wide per-district format: `date` plus one column per district.
pub fn load_district_series(
    path: &std::path::Path,
) -> Result<(Vec<String>, Vec<IncidenceSeries>), AppError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| AppError::validation(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| AppError::validation(format!("{}: {e}", path.display())))?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("date") {
        return Err(AppError::validation(format!(
            "{}: first column must be `date`",
            path.display()
        )));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if names.is_empty() {
        return Err(AppError::validation("district file has no district columns"));
    }
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut columns: Vec<Vec<u64>> = vec![Vec::new(); names.len()];
    for (row_no, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| AppError::validation(format!("{}: {e}", path.display())))?;
        let raw = record.get(0).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .map_err(|_| AppError::validation(format!("row {}: bad date `{raw}`", row_no + 2)))?;
        if let Some(prev) = dates.last() {
            if date != *prev + chrono::Days::new(1) {
                return Err(AppError::validation(format!(
                    "date gap: expected {}, found {date}",
                    *prev + chrono::Days::new(1)
                )));
            }
        }
        dates.push(date);
        for (i, cell) in record.iter().skip(1).enumerate() {
            let v: u64 = cell.trim().parse().map_err(|_| {
                AppError::validation(format!(
                    "row {} column {}: `{cell}` is not a count",
                    row_no + 2,
                    i + 2
                ))
            })?;
            columns[i].push(v);
        }
    }
    if dates.is_empty() {
        return Err(AppError::validation("district file has no rows"));
    }
    let series = columns
        .into_iter()
        .zip(&names)
        .map(|(cases, name)| IncidenceSeries::new(dates[0], cases, name.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((names, series))
}

pub fn parse_date(raw: &str) -> Result<NaiveDate, AppError> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map_err(|_| AppError::validation(format!("`{raw}` is not an ISO-8601 date")))
}
