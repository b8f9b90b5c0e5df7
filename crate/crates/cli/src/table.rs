use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(n) => Some(*n as f64),
            Cell::Text(_) => None,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => Value::from(*x),
            Cell::Num(_) => Value::Null,
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

/// 17 significant digits in scientific notation; `NaN`, `inf`, `-inf` otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Provenance attached to every table.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub map_builds: usize,
    /// Effective configuration after command-line overrides.
    pub config: Value,
    pub diagnostics: Value,
    pub warnings: Vec<String>,
}

impl Metadata {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.run.seed,
            map_builds: 0,
            config: config.to_json(),
            diagnostics: Value::Object(Default::default()),
            warnings: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(columns: &[&str], metadata: Metadata) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), metadata }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column (`NaN` for text cells).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).map_err(|e| CliError::Encode(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(|e| CliError::Encode(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Encode(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Encode(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let doc = serde_json::json!({
            "metadata": self.metadata,
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    /// Write the CSV to `path` and the JSON mirror next to it.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        let json_path = json_mirror_path(path);
        let csv = self.to_csv()?;
        std::fs::write(path, csv).map_err(|source| CliError::Write { path: path.to_path_buf(), source })?;
        std::fs::write(&json_path, self.to_json()).map_err(|source| CliError::Write { path: json_path.clone(), source })?;
        Ok(json_path)
    }
}

/// `out.csv` -> `out.json`; a path without extension gets `.json` appended.
pub fn json_mirror_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.5), "-2.5000000000000000e0");
        assert_eq!(format_float(f64::NAN), "NaN");
        let x = 0.514_995_501_619_41_f64;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_uses_lf() {
        let mut t = ResultTable::new(&["a", "status"], Metadata::new("test", &ExperimentConfig::default()));
        t.push(vec![Cell::Num(1.0), Cell::Text("ok, fine".into())]);
        let s = t.to_csv().unwrap();
        assert_eq!(s, "a,status\n1.0000000000000000e0,\"ok, fine\"\n");
        assert!(t.to_json().contains("\"status\""));
    }
}
