//! Long-form output tables and their CSV/JSON encodings.
//!
//! Every CSV starts with one provenance comment line,
//! `# coherent-ft <version> config_sha256=<hex> seed=<seed>`, followed by a
//! header row. Floats are written in shortest round-trip form (exponent
//! notation for very small or large magnitudes) so a re-parse recovers the
//! exact in-memory values.

use std::io::{BufRead, Read, Write};

use serde::Serialize;

use crate::error::{CliError, Result};

pub const TOOL_NAME: &str = "coherent-ft";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(f64),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(x) => Some(x),
            Cell::Int(i) => Some(i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(i64::from(i))
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        // Counts beyond i64 are not physical; saturate rather than wrap.
        Cell::Int(i64::try_from(i).unwrap_or(i64::MAX))
    }
}

/// Provenance carried in the first line of every CSV.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_sha256: &str, seed: u64) -> Self {
        Self {
            version: VERSION.to_string(),
            config_sha256: config_sha256.to_string(),
            seed,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "# {TOOL_NAME} {} config_sha256={} seed={}",
            self.version, self.config_sha256, self.seed
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let bad = || CliError::ConfigParse(format!("malformed provenance line {line:?}"));
        let rest = line
            .strip_prefix("# ")
            .and_then(|r| r.strip_prefix(TOOL_NAME))
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(bad)?;
        let mut parts = rest.split(' ');
        let version = parts.next().filter(|v| !v.is_empty()).ok_or_else(bad)?;
        let sha = parts
            .next()
            .and_then(|p| p.strip_prefix("config_sha256="))
            .filter(|h| h.len() == 64 && h.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(bad)?;
        let seed = parts
            .next()
            .and_then(|p| p.strip_prefix("seed="))
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Self {
            version: version.to_string(),
            config_sha256: sha.to_string(),
            seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv<W: Write>(&self, prov: &Provenance, mut out: W) -> Result<()> {
        out.write_all(prov.line().as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| CliError::Io {
                context: self.file_name(),
                source: e,
            })?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| CliError::Io {
            context: self.file_name(),
            source: e,
        })?;
        Ok(())
    }

    /// Rows as an array of `{column: value}` objects.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| {
                        let value = match v {
                            Cell::Num(x) if !x.is_finite() => serde_json::Value::Null,
                            other => serde_json::to_value(other).expect("cell serializes"),
                        };
                        (c.to_string(), value)
                    })
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

/// A CSV read back from disk: provenance, header, and raw string fields.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedTable {
    pub provenance: Provenance,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column; empty fields become `None`.
    pub fn numbers(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let idx = self
            .column(name)
            .ok_or_else(|| CliError::ConfigParse(format!("no column {name}")))?;
        self.rows
            .iter()
            .map(|r| {
                let s = &r[idx];
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some).map_err(|_| {
                        CliError::ConfigParse(format!("column {name}: not a number {s:?}"))
                    })
                }
            })
            .collect()
    }
}

/// Parses a CSV written by [`Table::write_csv`].
pub fn read_table<R: Read>(input: R) -> Result<ParsedTable> {
    let mut reader = std::io::BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| CliError::Io {
        context: "table".into(),
        source: e,
    })?;
    let provenance = Provenance::parse_line(first.trim_end_matches('\n'))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if columns.is_empty() || columns.iter().any(String::is_empty) {
        return Err(CliError::ConfigParse("empty column name in header".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(ParsedTable {
        provenance,
        columns,
        rows,
    })
}
