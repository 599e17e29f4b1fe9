//! Tabular output shared by all subcommands. JSON files hold
//! `{meta, points[]}`; CSV files are the flat projection of `points`, preceded
//! by a `#` line carrying the metadata.

use std::fs;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Text(String),
    Flag(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(v) => format!("{v}"),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Flag(b) => Value::Bool(*b),
            Cell::Missing => Value::Null,
        }
    }
}

/// Ordered `key=value` run parameters.
#[derive(Debug, Clone, Default)]
pub struct Meta(Vec<(&'static str, String)>);

impl Meta {
    pub fn new(command: &str) -> Self {
        let mut m = Meta::default();
        m.push("program", concat!("qfeedback ", env!("CARGO_PKG_VERSION")));
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: &'static str, value: impl ToString) -> &mut Self {
        self.0.push((key, value.to_string()));
        self
    }

    fn header(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# {}\n", parts.join(" "))
    }

    pub fn json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.to_string(), Value::String(v.clone()))).collect())
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub meta: Meta,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(meta: Meta, columns: &[&'static str]) -> Self {
        Self { meta, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => Ok(self.render_json()),
        }
    }

    fn render_csv(&self) -> Result<Vec<u8>> {
        let mut out = self.meta.header().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let to_err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
            w.write_record(&self.columns).map_err(to_err)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::csv)).map_err(to_err)?;
            }
            w.flush().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
        }
        Ok(out)
    }

    fn render_json(&self) -> Vec<u8> {
        let points: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("meta".into(), self.meta.json());
        doc.insert("points".into(), Value::Array(points));
        json_bytes(&Value::Object(doc))
    }
}

pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("in-memory JSON serialization");
    out.push(b'\n');
    out
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Io { path: p.to_path_buf(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
