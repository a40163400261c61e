//! Deterministic table output.
//!
//! CSV rows print floats with 17 significant digits (`{:.16e}`), `.` as the
//! decimal separator, and `\n` line endings, so identical runs produce
//! byte-identical artifacts. JSON documents carry a `schema_version` field
//! and keep the column order in an explicit `columns` array.

use std::io::Write;

use crate::config::OutputConfig;

/// Version stamp of the JSON document layout.
pub const SCHEMA_VERSION: u64 = 1;

/// One table cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// A named table: the unit every subcommand emits.
#[derive(Debug, Clone)]
pub struct Table {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &'static str, columns: Vec<&'static str>) -> Self {
        Table {
            command,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// 17-significant-digit float text (deterministic across runs).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_cell(cell: &Cell) -> String {
    match cell {
        Cell::Int(i) => i.to_string(),
        Cell::Float(x) => fmt_float(*x),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
    }
}

pub fn to_csv(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(csv_cell).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn json_cell(cell: &Cell) -> serde_json::Value {
    match cell {
        Cell::Int(i) => serde_json::Value::from(*i),
        Cell::Float(x) => serde_json::Value::from(*x),
        Cell::Text(s) => serde_json::Value::from(s.as_str()),
        Cell::Bool(b) => serde_json::Value::from(*b),
    }
}

pub fn to_json(table: &Table) -> String {
    let records: Vec<serde_json::Value> = table
        .rows
        .iter()
        .map(|row| serde_json::Value::Array(row.iter().map(json_cell).collect()))
        .collect();
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": table.command,
        "columns": table.columns,
        "records": records,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("table serializes");
    text.push('\n');
    text
}

pub fn render(table: &Table, format: &str) -> String {
    match format {
        "json" => to_json(table),
        _ => to_csv(table),
    }
}

/// Writes rendered text to the configured destination (stdout when no path).
pub fn write_out(text: &str, output: &OutputConfig) -> std::io::Result<()> {
    match output.path.as_deref() {
        None | Some("-") => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
        Some(path) => std::fs::write(path, text),
    }
}

/// Sibling artifact name for the critical-point table of a scan:
/// `scan.csv` -> `scan.critical.csv`, `scan` -> `scan.critical`.
pub fn critical_sibling(path: &str) -> String {
    match path.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() && !ext.contains('/') => {
            format!("{stem}.critical.{ext}")
        }
        _ => format!("{path}.critical"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_print_17_significant_digits_with_point_and_newline() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(-0.125), "-1.2500000000000000e-1");
        let mut table = Table::new("demo", vec!["a", "b"]);
        table.push(vec![Cell::Float(std::f64::consts::PI), Cell::Int(3)]);
        let csv = to_csv(&table);
        assert_eq!(csv, "a,b\n3.1415926535897931e0,3\n");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn json_documents_carry_the_schema_version() {
        let mut table = Table::new("demo", vec!["x"]);
        table.push(vec![Cell::Bool(true)]);
        let json = to_json(&table);
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["schema_version"], 1);
        assert_eq!(doc["command"], "demo");
        assert_eq!(doc["records"][0][0], true);
    }

    #[test]
    fn critical_artifact_names_insert_a_suffix_before_the_extension() {
        assert_eq!(critical_sibling("scan.csv"), "scan.critical.csv");
        assert_eq!(critical_sibling("out/scan.json"), "out/scan.critical.json");
        assert_eq!(critical_sibling("scan"), "scan.critical");
    }
}
