//! Result tables as CSV (with a `.meta.json` sidecar) or JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    /// Text form used in CSV: 17 significant digits for numbers.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    pub metadata: BTreeMap<String, String>,
}

impl ResultsTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::Validation(format!(
                "row {i} has {} cells for {} columns",
                rows[i].len(),
                columns.len()
            )));
        }
        Ok(Self {
            columns,
            rows,
            metadata: BTreeMap::new(),
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn with_metadata<I, K, V>(mut self, items: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        self.metadata.extend(items.into_iter().map(|(k, v)| (k.into(), v.into())));
        self
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Validation(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Validation(format!("csv: {e}")))
    }

    pub fn metadata_json(&self) -> String {
        let map: Map<String, Value> = self.metadata.iter().map(|(k, v)| (k.clone(), Value::from(v.as_str()))).collect();
        let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("string map");
        s.push('\n');
        s
    }

    pub fn to_json(&self) -> String {
        let mut root = Map::new();
        root.insert("columns".into(), Value::from(self.columns.clone()));
        root.insert(
            "rows".into(),
            Value::Array(self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::to_json).collect())).collect()),
        );
        let meta: Map<String, Value> = self.metadata.iter().map(|(k, v)| (k.clone(), Value::from(v.as_str()))).collect();
        root.insert("metadata".into(), Value::Object(meta));
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("plain values");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Validation(format!("unknown format `{other}`"))),
        }
    }
}

/// Path of the metadata sidecar written next to a CSV file.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the table; CSV output gets a `.meta.json` sidecar.
pub fn write_results(table: &ResultsTable, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    match format {
        Format::Csv => {
            std::fs::write(path, table.to_csv()?).map_err(|e| Error::io(path, e))?;
            let meta = meta_path(path);
            std::fs::write(&meta, table.metadata_json()).map_err(|e| Error::io(meta, e))
        }
        Format::Json => std::fs::write(path, table.to_json()).map_err(|e| Error::io(path, e)),
    }
}

/// Header and rows of a CSV results file, as text.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Validation(format!("csv: {other:?}")),
    })?;
    let header = r
        .headers()
        .map_err(|e| Error::Validation(format!("csv: {e}")))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Validation(format!("csv: {e}")))?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok((header, rows))
}
