//! CSV and JSON writers. Every number is written with 9 significant digits.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
const SIG_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `x` with 9 significant digits, fixed notation for moderate magnitudes.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.*e}", SIG_DIGITS - 1);
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{e}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn round_sig(x: f64) -> f64 {
    fmt_num(x).parse().unwrap_or(x)
}

/// Rounds every float in `v` to 9 significant digits.
pub fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *v = json!(round_sig(x));
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// JSON document `{schema_version, kind, data}` with rounded numbers.
pub fn json_document<T: Serialize>(kind: &str, data: &T) -> Result<Vec<u8>> {
    let mut data = serde_json::to_value(data).map_err(|e| CliError::Serialization(e.to_string()))?;
    round_value(&mut data);
    let doc = json!({ "schema_version": SCHEMA_VERSION, "kind": kind, "data": data });
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Serialization(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(round_sig(*x)),
            Cell::Num(x) => json!(x.to_string()),
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(kind: &'static str, columns: &[&'static str]) -> Self {
        Self {
            kind,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Serialization(e.to_string());
        w.write_record(&self.columns).map_err(err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(err)?;
        }
        w.into_inner().map_err(|e| CliError::Serialization(e.to_string()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj = self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.to_json())).collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({ "schema_version": SCHEMA_VERSION, "kind": self.kind, "columns": self.columns, "rows": rows });
        let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Serialization(e.to_string()))?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files into one directory, recording their hashes in order.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    format: Format,
    pub records: Vec<OutputRecord>,
}

impl OutputSet {
    pub fn create(dir: &Path, format: Format) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            records: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(file);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.records.push(OutputRecord {
            file: file.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Writes `table` as `<stem>.csv` or `<stem>.json` per the chosen format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<()> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), &table.to_csv()?),
            Format::Json => self.write(&format!("{stem}.json"), &table.to_json()?),
        }
    }

    pub fn json<T: Serialize>(&mut self, stem: &str, kind: &str, data: &T) -> Result<()> {
        self.write(&format!("{stem}.json"), &json_document(kind, data)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(1.830513878_5), "1.83051388");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(123456789.4), "123456789");
        assert_eq!(fmt_num(9.999999999), "10");
        assert_eq!(fmt_num(1.23456789012e-7), "1.23456789e-7");
        assert_eq!(fmt_num(6.02214076e23), "6.02214076e23");
    }

    #[test]
    fn json_rounds_nested_numbers() {
        let bytes = json_document("t", &vec![(1.0f64 / 3.0, 2u64)]).unwrap();
        let v: Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["data"][0][0].as_f64().unwrap(), 0.333333333);
        assert_eq!(v["data"][0][1], 2);
    }

    #[test]
    fn csv_header_and_rows() {
        let mut t = Table::new("x", &["n", "m", "flag"]);
        t.push(vec![1u64.into(), 0.5.into(), true.into()]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "n,m,flag\n1,0.5,true\n");
    }
}
