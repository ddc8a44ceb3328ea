//! CSV and JSON emission. Reals are written with 17 significant digits so that
//! every value round-trips to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Real(f64),
    Text(String),
    Bool(bool),
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// `x` with 17 significant digits, e.g. `6.6666666666666663e-1`.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn real_json(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&real(x)).expect("formatted float is a JSON number"))
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => real(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::Number(Number::from_str(&i.to_string()).expect("integer")),
            Cell::Real(x) => real_json(*x),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Table { name: name.into(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Rewrites every non-integer number in `v` with 17 significant digits.
pub fn precise(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n.as_f64().map_or(Value::Null, real_json),
        Value::Array(a) => Value::Array(a.into_iter().map(precise).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, precise(v))).collect()),
        other => other,
    }
}

/// What a subcommand produces: named tables plus free-form JSON metadata.
#[derive(Debug, Clone, Default)]
pub struct Emission {
    pub command: &'static str,
    pub meta: Map<String, Value>,
    pub tables: Vec<Table>,
    /// Replaces the default JSON document when set.
    pub document: Option<Value>,
}

impl Emission {
    pub fn new(command: &'static str) -> Self {
        Emission { command, ..Default::default() }
    }

    pub fn json(&self) -> Value {
        if let Some(doc) = &self.document {
            return precise(doc.clone());
        }
        let mut obj = Map::new();
        obj.insert("command".into(), Value::String(self.command.into()));
        obj.insert("meta".into(), precise(Value::Object(self.meta.clone())));
        let tables: Map<String, Value> = self.tables.iter().map(|t| (t.name.clone(), t.to_json())).collect();
        obj.insert("tables".into(), Value::Object(tables));
        Value::Object(obj)
    }

    /// Text written to stdout when no output directory is given.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json()).expect("JSON values serialize");
                s.push('\n');
                s
            }
            Format::Csv if self.tables.len() == 1 => self.tables[0].to_csv(),
            Format::Csv => {
                self.tables.iter().map(|t| format!("# {}\n{}", t.name, t.to_csv())).collect::<Vec<_>>().join("\n")
            }
        }
    }

    /// Writes `<command>.json` or one `<table>.csv` per table into `dir`.
    pub fn write_to(&self, dir: &Path, format: Format) -> Result<Vec<std::path::PathBuf>, CliError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        match format {
            Format::Json => {
                let path = dir.join(format!("{}.json", self.command));
                std::fs::write(&path, self.render(Format::Json))?;
                written.push(path);
            }
            Format::Csv => {
                for t in &self.tables {
                    let path = dir.join(format!("{}.csv", t.name));
                    std::fs::write(&path, t.to_csv())?;
                    written.push(path);
                }
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [2.0 / 3.0, 1.0, 1e-300, -0.1, 5.0 / 9.0] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(real(2.0 / 3.0), "6.6666666666666663e-1");
        assert_eq!(real(f64::NAN), "NaN");
    }

    #[test]
    fn csv_quotes_text() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![Cell::from("1,2"), Cell::from(0.5)]);
        assert_eq!(t.to_csv(), "a,b\n\"1,2\",5.0000000000000000e-1\n");
    }

    #[test]
    fn json_uses_seventeen_digits() {
        let v = precise(serde_json::json!({"x": 0.1, "n": 3, "v": [1.0]}));
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"n":3,"v":[1.0000000000000000e+0],"x":1.0000000000000001e-1}"#);
    }
}
