//! Date-indexed daily count series.
//!
//! The series stores its start date once and addresses every observation by
//! the integer index `t = 1..=T` (consecutive calendar days, no gaps). Counts
//! are 64-bit integers; downstream arithmetic is double precision.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::Result;

/// Maps CSV column names onto series fields.
///
/// `recovered` and `deaths` are attached only when the named column exists in
/// the header; a missing optional column yields an absent field, never zeros.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub date: String,
    pub cases: String,
    pub recovered: Option<String>,
    pub deaths: Option<String>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            date: "date".into(),
            cases: "cases".into(),
            recovered: Some("recovered".into()),
            deaths: Some("deaths".into()),
        }
    }
}

/// Daily incidence counts over consecutive calendar days.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceSeries {
    start_date: NaiveDate,
    cases: Vec<u64>,
    recovered: Option<Vec<u64>>,
    deaths: Option<Vec<u64>>,
    label: String,
}

impl IncidenceSeries {
    /// Builds a series from daily case counts.
    pub fn new(start_date: NaiveDate, cases: Vec<u64>, label: impl Into<String>) -> Result<Self> {
        if cases.is_empty() {
            return Err(CoreError::EmptyInput);
        }
        Ok(Self {
            start_date,
            cases,
            recovered: None,
            deaths: None,
            label: label.into(),
        })
    }

    /// Attaches a same-length daily recovered series.
    pub fn with_recovered(mut self, recovered: Vec<u64>) -> Result<Self> {
        if recovered.len() != self.cases.len() {
            return Err(CoreError::LengthMismatch(format!(
                "recovered has {} entries, cases has {}",
                recovered.len(),
                self.cases.len()
            )));
        }
        self.recovered = Some(recovered);
        Ok(self)
    }

    /// Attaches a same-length daily deaths series.
    pub fn with_deaths(mut self, deaths: Vec<u64>) -> Result<Self> {
        if deaths.len() != self.cases.len() {
            return Err(CoreError::LengthMismatch(format!(
                "deaths has {} entries, cases has {}",
                deaths.len(),
                self.cases.len()
            )));
        }
        self.deaths = Some(deaths);
        Ok(self)
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    /// Number of observed days `T`.
    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn cases(&self) -> &[u64] {
        &self.cases
    }

    pub fn recovered(&self) -> Option<&[u64]> {
        self.recovered.as_deref()
    }

    pub fn deaths(&self) -> Option<&[u64]> {
        self.deaths.as_deref()
    }

    /// Case counts as doubles, in day order.
    pub fn cases_f64(&self) -> Vec<f64> {
        self.cases.iter().map(|&c| c as f64).collect()
    }

    /// Calendar date of index `t` (1-based).
    pub fn date_at(&self, t: usize) -> NaiveDate {
        self.start_date + chrono::Days::new(t as u64 - 1)
    }

    /// 1-based index of `date`, if it falls inside the observed range.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = date.signed_duration_since(self.start_date).num_days();
        if offset < 0 || offset >= self.len() as i64 {
            None
        } else {
            Some(offset as usize + 1)
        }
    }

    /// 1-based index of the first strictly positive case count.
    pub fn first_case_index(&self) -> Option<usize> {
        self.cases.iter().position(|&c| c > 0).map(|i| i + 1)
    }

    /// Running totals of the case counts.
    pub fn cumulative_cases(&self) -> Vec<u64> {
        self.cases
            .iter()
            .scan(0u64, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect()
    }

    /// Sub-series over the inclusive 1-based index range `[from, to]`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from < 1 || to > self.len() || from > to {
            return Err(CoreError::InvalidArgument(format!(
                "slice [{from}, {to}] outside series of length {}",
                self.len()
            )));
        }
        let range = (from - 1)..to;
        Ok(Self {
            start_date: self.date_at(from),
            cases: self.cases[range.clone()].to_vec(),
            recovered: self.recovered.as_ref().map(|r| r[range.clone()].to_vec()),
            deaths: self.deaths.as_ref().map(|d| d[range.clone()].to_vec()),
            label: self.label.clone(),
        })
    }

    /// Sub-series between two calendar dates (inclusive).
    pub fn slice_dates(&self, from: NaiveDate, to: NaiveDate) -> Result<Self> {
        let a = self
            .index_of(from)
            .ok_or_else(|| CoreError::InvalidArgument(format!("{from} outside series")))?;
        let b = self
            .index_of(to)
            .ok_or_else(|| CoreError::InvalidArgument(format!("{to} outside series")))?;
        self.slice(a, b)
    }

    /// Reads a series from a CSV file using `schema`.
    ///
    /// Dates must be consecutive calendar days; a gap is rejected rather than
    /// imputed. Each malformed cell maps to a distinct error variant.
    pub fn load(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path.as_ref())?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CoreError::MissingColumn(name.to_string()))
        };
        let date_idx = col(&schema.date)?;
        let cases_idx = col(&schema.cases)?;
        // Optional columns participate only when present in the header.
        let recovered_idx = schema
            .recovered
            .as_deref()
            .and_then(|n| headers.iter().position(|h| h == n));
        let deaths_idx = schema
            .deaths
            .as_deref()
            .and_then(|n| headers.iter().position(|h| h == n));

        let mut dates: Vec<NaiveDate> = Vec::new();
        let mut cases = Vec::new();
        let mut recovered = Vec::new();
        let mut deaths = Vec::new();
        for (row_no, record) in reader.records().enumerate() {
            let record = record?;
            let row = row_no + 2; // 1-based, counting the header row
            let raw_date = record.get(date_idx).unwrap_or("").trim();
            let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| {
                CoreError::BadDate {
                    row,
                    value: raw_date.to_string(),
                }
            })?;
            if let Some(prev) = dates.last() {
                let expected = *prev + chrono::Days::new(1);
                if date != expected {
                    return Err(CoreError::DateGap {
                        expected: expected.to_string(),
                        found: date.to_string(),
                    });
                }
            }
            dates.push(date);
            cases.push(parse_count(record.get(cases_idx).unwrap_or(""), row)?);
            if let Some(idx) = recovered_idx {
                recovered.push(parse_count(record.get(idx).unwrap_or(""), row)?);
            }
            if let Some(idx) = deaths_idx {
                deaths.push(parse_count(record.get(idx).unwrap_or(""), row)?);
            }
        }
        if dates.is_empty() {
            return Err(CoreError::EmptyInput);
        }

        let mut series = Self::new(dates[0], cases, "")?;
        if recovered_idx.is_some() {
            series = series.with_recovered(recovered)?;
        }
        if deaths_idx.is_some() {
            series = series.with_deaths(deaths)?;
        }
        Ok(series)
    }

    /// Writes the series back to CSV with the default column names.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path.as_ref())?;
        let mut header = vec!["date".to_string(), "cases".to_string()];
        if self.recovered.is_some() {
            header.push("recovered".into());
        }
        if self.deaths.is_some() {
            header.push("deaths".into());
        }
        writer.write_record(&header)?;
        for t in 1..=self.len() {
            let mut row = vec![self.date_at(t).to_string(), self.cases[t - 1].to_string()];
            if let Some(r) = &self.recovered {
                row.push(r[t - 1].to_string());
            }
            if let Some(d) = &self.deaths {
                row.push(d[t - 1].to_string());
            }
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn parse_count(raw: &str, row: usize) -> Result<u64> {
    let value = raw.trim();
    if let Ok(n) = value.parse::<i64>() {
        if n < 0 {
            return Err(CoreError::NegativeCount {
                row,
                value: value.to_string(),
            });
        }
        return Ok(n as u64);
    }
    // "3.0" style floats count as non-integer: the schema promises counts.
    Err(CoreError::NonIntegerCount {
        row,
        value: value.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_row_file_parses() {
        let f = write_csv("date,cases\n2020-03-01,1\n2020-03-02,0\n2020-03-03,2\n");
        let s = IncidenceSeries::load(f.path(), &ColumnSchema::default()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.cases(), &[1, 0, 2]);
        assert_eq!(s.start_date(), date("2020-03-01"));
        assert!(s.recovered().is_none());
        assert!(s.deaths().is_none());
    }

    #[test]
    fn skipped_date_is_rejected() {
        let f = write_csv("date,cases\n2020-03-01,1\n2020-03-03,2\n");
        let err = IncidenceSeries::load(f.path(), &ColumnSchema::default()).unwrap_err();
        assert!(matches!(err, CoreError::DateGap { .. }), "{err}");
    }

    #[test]
    fn missing_required_column() {
        let f = write_csv("day,cases\n2020-03-01,1\n");
        let err = IncidenceSeries::load(f.path(), &ColumnSchema::default()).unwrap_err();
        assert!(matches!(err, CoreError::MissingColumn(c) if c == "date"));
    }

    #[test]
    fn negative_and_fractional_counts_are_distinct_errors() {
        let f = write_csv("date,cases\n2020-03-01,-2\n");
        assert!(matches!(
            IncidenceSeries::load(f.path(), &ColumnSchema::default()).unwrap_err(),
            CoreError::NegativeCount { .. }
        ));
        let f = write_csv("date,cases\n2020-03-01,1.5\n");
        assert!(matches!(
            IncidenceSeries::load(f.path(), &ColumnSchema::default()).unwrap_err(),
            CoreError::NonIntegerCount { .. }
        ));
    }

    #[test]
    fn optional_columns_attach_when_present() {
        let f = write_csv("date,cases,recovered,deaths\n2020-03-01,5,1,0\n2020-03-02,2,2,1\n");
        let s = IncidenceSeries::load(f.path(), &ColumnSchema::default()).unwrap();
        assert_eq!(s.recovered(), Some(&[1, 2][..]));
        assert_eq!(s.deaths(), Some(&[0, 1][..]));
    }

    #[test]
    fn save_load_round_trip() {
        let s = IncidenceSeries::new(date("2020-03-01"), vec![3, 0, 7, 2], "x")
            .unwrap()
            .with_recovered(vec![0, 1, 2, 3])
            .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        s.save(f.path()).unwrap();
        let back = IncidenceSeries::load(f.path(), &ColumnSchema::default()).unwrap();
        assert_eq!(back.cases(), s.cases());
        assert_eq!(back.recovered(), s.recovered());
        assert_eq!(back.start_date(), s.start_date());
    }

    #[test]
    fn index_date_round_trip() {
        let s = IncidenceSeries::new(date("2020-03-01"), vec![0; 92], "x").unwrap();
        assert_eq!(s.date_at(1), date("2020-03-01"));
        assert_eq!(s.date_at(92), date("2020-05-31"));
        assert_eq!(s.index_of(date("2020-03-23")), Some(23));
        assert_eq!(s.index_of(date("2020-06-01")), None);
    }

    #[test]
    fn slicing_keeps_alignment() {
        let s = IncidenceSeries::new(date("2020-03-01"), (0..10).collect(), "x").unwrap();
        let sub = s.slice(4, 6).unwrap();
        assert_eq!(sub.start_date(), date("2020-03-04"));
        assert_eq!(sub.cases(), &[3, 4, 5]);
        assert!(s.slice(0, 3).is_err());
        assert!(s.slice(5, 11).is_err());
    }
}
