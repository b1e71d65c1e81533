//! Tabular reports and their CSV / JSON renderings.
//!
//! CSV output starts with `# key: value` metadata lines followed by a header
//! and one line per row. JSON output is `{"metadata": {...}, "rows": [...]}`
//! with one object per row, keys in column order.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

/// Margins at or above this value pass.
pub const MARGIN_TOLERANCE: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => serde_json::Number::from_f64(*v)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(format_float(*v))),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e15)`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Metadata {
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub command_line: String,
}

impl Metadata {
    pub fn new(command_line: String, with_timestamp: bool) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            timestamp: with_timestamp.then(|| chrono::Utc::now().to_rfc3339()),
            command_line,
        }
    }

    fn lines(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("tool_version", self.tool_version.clone())];
        if let Some(seed) = self.seed {
            out.push(("seed", seed.to_string()));
        }
        if let Some(ts) = &self.timestamp {
            out.push(("timestamp", ts.clone()));
        }
        out.push(("command_line", self.command_line.clone()));
        out
    }
}

/// A table with fixed column order, plus an overall pass flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub metadata: Metadata,
    pub columns: Vec<&'static str>,
    /// Columns present only in the JSON rendering.
    pub json_only: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub passed: bool,
}

impl Report {
    pub fn new(metadata: Metadata, columns: Vec<&'static str>) -> Self {
        Self {
            metadata,
            columns,
            json_only: Vec::new(),
            rows: Vec::new(),
            passed: true,
        }
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    fn csv_width(&self) -> usize {
        self.columns.len()
    }

    fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (key, value) in self.metadata.lines() {
            writeln!(out, "# {key}: {value}")?;
        }
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row[..self.csv_width()].iter().map(Cell::to_csv))?;
        }
        writer.flush()?;
        Ok(())
    }

    fn write_json<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let names: Vec<&str> = self
            .columns
            .iter()
            .chain(&self.json_only)
            .copied()
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = names
                    .iter()
                    .zip(row)
                    .map(|(name, cell)| (name.to_string(), cell.to_json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({
            "metadata": self.metadata,
            "rows": rows,
        });
        serde_json::to_writer_pretty(&mut out, &doc)?;
        writeln!(out)
    }
}

/// One row of a bound verification: `margin = rhs - lhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub parameters: Vec<Cell>,
    pub lhs: f64,
    /// Exact left-hand side as `p/q`, when it is rational.
    pub lhs_exact: Option<String>,
    pub rhs: f64,
}

impl BoundRow {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn pass(&self) -> bool {
        self.margin() >= MARGIN_TOLERANCE
    }
}

/// Verification report whose rows are `parameters..., lhs, rhs, margin,
/// pass`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub metadata: Metadata,
    pub parameter_names: Vec<&'static str>,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(BoundRow::pass)
    }

    pub fn min_margin(&self) -> Option<f64> {
        self.rows.iter().map(BoundRow::margin).reduce(f64::min)
    }

    pub fn into_report(self) -> Report {
        let mut columns = self.parameter_names.clone();
        columns.extend(["lhs", "rhs", "margin", "pass"]);
        let passed = self.all_pass();
        let has_exact = self.rows.iter().any(|r| r.lhs_exact.is_some());
        let mut report = Report::new(self.metadata, columns);
        if has_exact {
            report.json_only.push("lhs_exact");
        }
        report.passed = passed;
        report.rows = self
            .rows
            .into_iter()
            .map(|row| {
                let mut cells = row.parameters.clone();
                cells.extend([
                    Cell::Float(row.lhs),
                    Cell::Float(row.rhs),
                    Cell::Float(row.margin()),
                    Cell::Bool(row.pass()),
                ]);
                if has_exact {
                    cells.push(Cell::Text(row.lhs_exact.clone().unwrap_or_default()));
                }
                cells
            })
            .collect();
        report
    }
}
