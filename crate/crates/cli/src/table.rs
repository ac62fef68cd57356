//! Column-ordered result tables and their CSV / JSON encodings.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::spec::{Format, SweepSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl Cell {
    /// CSV form: floats in scientific notation with 17 significant digits.
    pub fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "NaN".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) | Cell::Missing => Value::Null,
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(n) => Some(*n as f64),
            _ => None,
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

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
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

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Runtime(format!("csv encoding failed: {e}"));
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv)).map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| CliError::Runtime(format!("csv encoding failed: {e}")))
    }

    pub fn to_json(&self, spec: &SweepSpec) -> Result<Vec<u8>, CliError> {
        #[derive(Serialize)]
        struct Envelope<'a> {
            metadata: Metadata<'a>,
            columns: &'a [String],
            rows: Vec<Vec<Value>>,
        }
        #[derive(Serialize)]
        struct Metadata<'a> {
            tool: &'static str,
            version: &'static str,
            seed: u64,
            spec: &'a SweepSpec,
        }
        let doc = Envelope {
            metadata: Metadata {
                tool: "fso-adapt",
                version: env!("CARGO_PKG_VERSION"),
                seed: spec.seed,
                spec,
            },
            columns: &self.columns,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(Cell::to_json).collect())
                .collect(),
        };
        let mut out = serde_json::to_vec_pretty(&doc)
            .map_err(|e| CliError::Runtime(format!("json encoding failed: {e}")))?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn encode(&self, spec: &SweepSpec) -> Result<Vec<u8>, CliError> {
        match spec.format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(spec),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_keeps_seventeen_digits() {
        let mut t = Table::new(["a", "b", "c", "d"]);
        t.push(vec![0.1.into(), Cell::Int(3), Cell::Missing, f64::NAN.into()]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "a,b,c,d\n1.0000000000000001e-1,3,,NaN\n");
        let back: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn csv_round_trips_every_bit() {
        for x in [std::f64::consts::PI, 1e-300, 2.6008, -7.0 / 3.0, f64::MIN_POSITIVE] {
            let s = Cell::Num(x).to_csv();
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
