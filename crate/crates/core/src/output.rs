//! Versioned JSON documents and commented CSV tables.

use std::io::{self, Write};

use serde::Serialize;

/// Bumped whenever a field of an emitted document changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Envelope shared by every JSON document.
#[derive(Debug, Clone, Serialize)]
pub struct Document<T: Serialize> {
    pub schema_version: u32,
    pub kind: &'static str,
    pub rng: &'static str,
    pub payload: T,
}

impl<T: Serialize> Document<T> {
    pub fn new(kind: &'static str, payload: T) -> Self {
        Self { schema_version: SCHEMA_VERSION, kind, rng: crate::RNG_NAME, payload }
    }

    pub fn to_json_pretty(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Numeric table written as CSV with a leading `#` comment line.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub comment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(comment: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            comment: comment.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# {}", self.comment.replace('\n', " "))?;
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_cell(*v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Shortest round-trip representation, so reruns are byte-identical.
fn format_cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        v.to_string()
    }
}
