//! District populations and the daily commuting matrix.
//!
//! The mobility file is a square CSV with a district-name header row and a
//! matching name column; entry `(i, j)` is the daily number of people
//! traveling from district `i` to district `j`. The diagonal must be zero.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::Result;

/// Square matrix of daily traveler counts between named districts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MobilityMatrix {
    districts: Vec<String>,
    /// Row-major flows; `flows[i][j]` travels from district i to district j.
    flows: Vec<Vec<f64>>,
}

impl MobilityMatrix {
    pub fn new(districts: Vec<String>, flows: Vec<Vec<f64>>) -> Result<Self> {
        let n = districts.len();
        if n == 0 || flows.len() != n || flows.iter().any(|r| r.len() != n) {
            return Err(CoreError::LengthMismatch(format!(
                "mobility matrix must be {n}x{n} to match the district list"
            )));
        }
        for (i, row) in flows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(CoreError::InvalidArgument(format!(
                        "mobility entry ({i},{j}) = {v} must be a non-negative real"
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(CoreError::InvalidArgument(format!(
                        "mobility diagonal entry ({i},{i}) must be zero, got {v}"
                    )));
                }
            }
        }
        Ok(Self { districts, flows })
    }

    /// All-zero matrix over `n` anonymous districts (useful in tests).
    pub fn zero(n: usize) -> Self {
        Self {
            districts: (0..n).map(|i| format!("district-{i}")).collect(),
            flows: vec![vec![0.0; n]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.districts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.districts.is_empty()
    }

    pub fn districts(&self) -> &[String] {
        &self.districts
    }

    /// Daily travelers from district `from` to district `to`.
    pub fn flow(&self, from: usize, to: usize) -> f64 {
        self.flows[from][to]
    }

    /// Total daily outflow of district `i`.
    pub fn outflow(&self, i: usize) -> f64 {
        self.flows[i].iter().sum()
    }

    /// Total daily inflow of district `i`.
    pub fn inflow(&self, i: usize) -> f64 {
        self.flows.iter().map(|row| row[i]).sum()
    }

    /// Reads the header-row/name-column CSV format.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path.as_ref())?;
        let headers = reader.headers()?.clone();
        if headers.len() < 2 {
            return Err(CoreError::InvalidArgument(
                "mobility file needs a name column plus one column per district".into(),
            ));
        }
        let districts: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut flows = Vec::new();
        let mut row_names = Vec::new();
        for (row_no, record) in reader.records().enumerate() {
            let record = record?;
            row_names.push(record.get(0).unwrap_or("").to_string());
            let mut row = Vec::new();
            for (j, cell) in record.iter().skip(1).enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| CoreError::InvalidArgument(
                    format!("mobility row {} column {}: `{cell}` is not a number", row_no + 2, j + 2),
                ))?;
                row.push(v);
            }
            flows.push(row);
        }
        if row_names != districts {
            return Err(CoreError::InvalidArgument(format!(
                "mobility row names {row_names:?} do not match header {districts:?}"
            )));
        }
        Self::new(districts, flows)
    }
}

/// District names with their resident populations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistrictTable {
    pub names: Vec<String>,
    pub populations: Vec<f64>,
}

impl DistrictTable {
    /// Reads a two-column `district,population` CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path.as_ref())?;
        let mut names = Vec::new();
        let mut populations = Vec::new();
        for (row_no, record) in reader.records().enumerate() {
            let record = record?;
            names.push(record.get(0).unwrap_or("").to_string());
            let raw = record.get(1).unwrap_or("").trim();
            let pop: f64 = raw.parse().map_err(|_| CoreError::InvalidArgument(
                format!("district row {}: `{raw}` is not a population", row_no + 2),
            ))?;
            if pop <= 0.0 {
                return Err(CoreError::InvalidArgument(format!(
                    "district {} has non-positive population {pop}",
                    names.last().unwrap()
                )));
            }
            populations.push(pop);
        }
        if names.is_empty() {
            return Err(CoreError::EmptyInput);
        }
        Ok(Self { names, populations })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn rejects_nonzero_diagonal_and_negative_entries() {
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(MobilityMatrix::new(names.clone(), vec![vec![1.0, 2.0], vec![3.0, 0.0]]).is_err());
        assert!(MobilityMatrix::new(names, vec![vec![0.0, -2.0], vec![3.0, 0.0]]).is_err());
    }

    #[test]
    fn loads_header_name_format() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"district,a,b\na,0,12\nb,5,0\n").unwrap();
        let m = MobilityMatrix::load(f.path()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.flow(0, 1), 12.0);
        assert_eq!(m.inflow(0), 5.0);
        assert_eq!(m.outflow(0), 12.0);
    }
}
