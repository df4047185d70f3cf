use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A result table plus a free-form record of solver details.
#[derive(Debug, Clone, Serialize)]
pub struct Output {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub details: serde_json::Value,
}

impl Output {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn details<T: Serialize>(mut self, d: &T) -> Self {
        self.details = serde_json::to_value(d).unwrap_or(serde_json::Value::Null);
        self
    }

    pub fn render(&self, cfg: &RunConfig) -> Result<String, CliError> {
        match cfg.format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(cfg),
        }
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(|e| CliError::Io(e.to_string()))?;
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(cell_text).collect();
            w.write_record(&fields).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn to_json(&self, cfg: &RunConfig) -> Result<String, CliError> {
        #[derive(Serialize)]
        struct Record<'a> {
            config: &'a RunConfig,
            columns: &'a [String],
            rows: &'a [Vec<Cell>],
            details: &'a serde_json::Value,
        }
        let rec = Record {
            config: cfg,
            columns: &self.columns,
            rows: &self.rows,
            details: &self.details,
        };
        let mut s = serde_json::to_string_pretty(&rec).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        Cell::Num(v) => sig12(*v),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

/// Twelve significant digits, fixed notation for moderate exponents, trailing zeros trimmed.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(0.745440332114155), "0.745440332114");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(-2.5e-7), "-2.5e-7");
        assert_eq!(sig12(123456789012345.0), "1.23456789012e14");
        assert_eq!(sig12(0.0), "0");
    }
}
