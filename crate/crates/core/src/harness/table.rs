use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Identifies the run a table came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

/// A named table with a fixed column schema. Values are pre-formatted so the
/// file content is a pure function of the computed numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::arg(format!(
                "table `{}` has {} columns, row has {}",
                self.name,
                self.columns.len(),
                row.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }

    /// Numeric view of a column; non-numeric cells become NaN.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        Some(self.column(name)?.into_iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect())
    }

    /// Writes `<dir>/<name>.csv` with `#`-prefixed provenance lines ahead of
    /// the header row.
    pub fn write_csv(&self, dir: &Path, prov: &Provenance) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut file = std::fs::File::create(&path)?;
        writeln!(file, "# table: {}", self.name)?;
        writeln!(file, "# config_sha256: {}", prov.config_sha256)?;
        writeln!(file, "# seed: {}", prov.seed)?;
        writeln!(file, "# version: {}", prov.version)?;
        let mut out = csv::Writer::from_writer(file);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(path)
    }

    /// Reads a table written by [`ResultTable::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Self> {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
        let columns = rdr.headers()?.iter().map(String::from).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(Self { name, columns, rows })
    }
}

/// Fixed formatting for floating-point cells.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
