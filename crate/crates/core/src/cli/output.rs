//! Plot-ready tables, JSON documents and atomic file writes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub scenario: String,
    pub scenario_sha256: String,
    pub steps: usize,
    pub hbar: f64,
}

impl Metadata {
    pub fn new(command: &str, scenario: &str, sha256: &str, steps: usize, hbar: f64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            scenario: scenario.into(),
            scenario_sha256: sha256.into(),
            steps,
            hbar,
        }
    }
}

/// Column-major numeric table; `None` cells are written empty (CSV) or `null` (JSON).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

#[derive(Serialize)]
struct TableDocument<'a> {
    metadata: &'a Metadata,
    columns: &'a [String],
    rows: &'a [Vec<Option<f64>>],
}

/// Seventeen significant digits, which round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.map(format_float).unwrap_or_default()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, metadata: &Metadata) -> String {
        let doc = TableDocument { metadata, columns: &self.columns, rows: &self.rows };
        let mut s = serde_json::to_string(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format, metadata: &Metadata) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(metadata),
        }
    }
}

/// JSON object with `metadata` followed by the fields of `body`.
pub fn json_report<T: Serialize>(metadata: &Metadata, body: &T) -> String {
    let mut value = serde_json::to_value(body).expect("report serializes");
    let mut doc = serde_json::Map::new();
    doc.insert("metadata".into(), serde_json::to_value(metadata).expect("metadata serializes"));
    if let serde_json::Value::Object(fields) = &mut value {
        doc.append(fields);
    } else {
        doc.insert("report".into(), value);
    }
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(doc)).expect("report serializes");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run never leaves a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes to `path` atomically, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells() {
        let mut t = Table::new(&["t", "x"]);
        t.push(vec![Some(0.0), None]);
        t.push(vec![Some(0.1), Some(-1.0)]);
        assert_eq!(t.to_csv(), "t,x\n0.0000000000000000e0,\n1.0000000000000001e-1,-1.0000000000000000e0\n");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, std::f64::consts::PI] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut t = Table::new(&["a"]);
        let values = [0.1, 1.0 / 3.0, -7.123456789012345e-12];
        for v in values {
            t.push(vec![Some(v)]);
        }
        t.push(vec![None]);
        let m = Metadata::new("test", "s", "00", 3, 1.0);
        let doc: serde_json::Value = serde_json::from_str(&t.to_json(&m)).unwrap();
        let rows = doc["rows"].as_array().unwrap();
        for (row, v) in rows.iter().zip(values) {
            assert_eq!(row[0].as_f64().unwrap(), v);
        }
        assert!(rows[3][0].is_null());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, "one\n").unwrap();
        write_atomic(&p, "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
