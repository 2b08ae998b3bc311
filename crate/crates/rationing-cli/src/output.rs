//! Report emission: JSON documents or CSV tables to stdout or a file.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Header row plus data rows; numbers use Rust's shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Result of one command: a JSON document, an optional table for
/// `--format csv`, and whether every check it ran passed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: serde_json::Value,
    pub table: Option<Table>,
    pub passed: bool,
}

impl Outcome {
    pub fn render(&self, format: Format) -> CliResult<String> {
        match (format, &self.table) {
            (Format::Csv, Some(t)) => t.to_csv(),
            _ => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("report serializes");
                s.push('\n');
                Ok(s)
            }
        }
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> CliResult<()> {
        let text = self.render(format)?;
        match out {
            Some(p) => std::fs::write(p, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}
