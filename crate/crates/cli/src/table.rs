//! Result tables and their text and CSV renderings.

use std::fmt::Write as _;
use std::time::Duration;

use decoherence_core::reservoir::RateReport;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    /// Rate cell: the rate, or the string `forbidden` for an exact zero.
    pub fn rate(report: &RateReport) -> Cell {
        if report.is_forbidden() {
            Cell::Text("forbidden".into())
        } else {
            Cell::Real(report.rate)
        }
    }

    pub fn reason(report: &RateReport) -> Cell {
        Cell::Text(report.forbidden_reason.as_str().into())
    }

    pub fn flag(b: bool) -> Cell {
        Cell::Text(b.to_string())
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => full_precision(*x),
            Cell::Text(s) => csv_quote(s),
        }
    }

    fn text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) if x.is_finite() => format!("{x:.5e}"),
            Cell::Real(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

/// 17 significant digits, enough to round-trip any f64.
fn full_precision(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata {
    pub task: String,
    pub config_digest: String,
    pub version: String,
    pub elapsed: Option<Duration>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    pub metadata: Option<Metadata>,
    /// Set when a reported quantity moved under a larger Fock truncation.
    pub truncation_unconverged: bool,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: None,
            truncation_unconverged: false,
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Appends a row. Panics if its length differs from the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row length must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
}

/// Renders the table. CSV output carries no timing, so equal tables give
/// equal bytes.
pub fn emit(table: &ResultTable, format: Format) -> String {
    match format {
        Format::Csv => emit_csv(table),
        Format::Text => emit_text(table),
    }
}

fn metadata_lines(meta: &Metadata, with_timing: bool) -> Vec<String> {
    let mut lines = vec![
        format!("task: {}", meta.task),
        format!("version: {}", meta.version),
        format!("config_sha256: {}", meta.config_digest),
    ];
    if with_timing {
        if let Some(t) = meta.elapsed {
            lines.push(format!("elapsed_seconds: {:.3}", t.as_secs_f64()));
        }
    }
    lines.extend(meta.warnings.iter().map(|w| format!("warning: {w}")));
    lines.extend(meta.notes.iter().map(|n| format!("note: {n}")));
    lines
}

fn emit_csv(table: &ResultTable) -> String {
    let mut out = String::new();
    if let Some(meta) = &table.metadata {
        for line in metadata_lines(meta, false) {
            let _ = writeln!(out, "# {line}");
        }
    }
    let header: Vec<String> = table.columns.iter().map(|c| csv_quote(c)).collect();
    let _ = writeln!(out, "{}", header.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn emit_text(table: &ResultTable) -> String {
    let rendered: Vec<Vec<String>> = table.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
    let widths: Vec<usize> = table
        .columns
        .iter()
        .enumerate()
        .map(|(j, c)| rendered.iter().map(|r| r[j].len()).chain([c.len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = String::new();
    if let Some(meta) = &table.metadata {
        for l in metadata_lines(meta, true) {
            let _ = writeln!(out, "# {l}");
        }
    }
    let _ = writeln!(out, "{}", line(&table.columns));
    for r in &rendered {
        let _ = writeln!(out, "{}", line(r));
    }
    out
}
