use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::sibling;
use crate::error::Result;

/// One CSV cell. Reals are written with 17 significant digits and without
/// negative zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            // `+ 0.0` turns a negative zero into a positive one
            Cell::Real(v) => write!(f, "{:.16e}", v + 0.0),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Rows of named columns produced by one operation. The CSV form prefixes
/// every row with the operation name and ends it with the mesh tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub op: String,
    pub tau: f64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(op: impl Into<String>, tau: f64, columns: &[&str]) -> Self {
        Self { op: op.into(), tau, columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header of `{}`", self.op);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Real values of a named column; non-real cells are skipped.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.columns.iter().position(|c| c == name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|r| match r[i] {
                Cell::Real(v) => Some(v),
                Cell::Int(v) => Some(v as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["op".to_string()];
        header.extend(self.columns.iter().cloned());
        header.push("tau".into());
        w.write_record(&header)?;
        let tau = Cell::Real(self.tau).to_string();
        for row in &self.rows {
            let mut record = vec![self.op.clone()];
            record.extend(row.iter().map(|c| c.to_string()));
            record.push(tau.clone());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    /// Writes the CSV to `path` and the metadata next to it with a `.json`
    /// extension.
    pub fn write_files(&self, path: &Path, metadata: &Metadata) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)?;
        std::fs::write(sibling(path, "json"), serde_json::to_string_pretty(metadata)?)?;
        Ok(())
    }
}

/// JSON sidecar of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub op: String,
    pub version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub tau: f64,
    pub wall_time_s: f64,
    pub assertions: Vec<super::Assertion>,
}
