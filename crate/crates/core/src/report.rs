//! Tabular results rendered as CSV or JSON with 12 significant digits.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_owned())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(x) => f.write_str(&format_num(*x)),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Empty => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Appends a row; panics if its width differs from the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Formats `x` with 12 significant digits, dropping trailing zeros.
pub fn format_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let rounded: f64 = sci.parse().expect("valid float");
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s.to_owned()
    }
}

pub fn write_report(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns).expect("in-memory write");
            for row in &table.rows {
                w.write_record(row.iter().map(|c| c.to_string())).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
        }
        Format::Json => {
            let mut out = String::from("[");
            for (r, row) in table.rows.iter().enumerate() {
                out.push_str(if r == 0 { "\n  {" } else { ",\n  {" });
                for (c, (name, cell)) in table.columns.iter().zip(row).enumerate() {
                    if c > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&serde_json::to_string(name).expect("string key"));
                    out.push_str(": ");
                    out.push_str(&json_cell(cell));
                }
                out.push('}');
            }
            out.push_str(if table.rows.is_empty() { "]\n" } else { "\n]\n" });
            out
        }
    }
}

fn json_cell(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) if x.is_finite() => format_num(*x),
        Cell::Num(x) => serde_json::to_string(&format_num(*x)).expect("string"),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => serde_json::to_string(s).expect("string"),
        Cell::Bool(b) => b.to_string(),
        Cell::Empty => "null".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_num(2.0), "2");
        assert_eq!(format_num(4.0 / 3.0), "1.33333333333");
        assert_eq!(format_num(-0.5), "-0.5");
        assert_eq!(format_num(21.0 / 16.0), "1.3125");
        assert_eq!(format_num(1e-9), "1e-9");
        assert_eq!(format_num(123456789012345.0), "123456789012000");
        assert_eq!(format_num(1.5e20), "1.5e20");
        assert_eq!(format_num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_output() {
        let mut t = Table::new(["k", "lambda"]);
        t.push(vec![2.0.into(), 2.0.into()]);
        assert_eq!(write_report(&t, Format::Csv), "k,lambda\n2,2\n");
        let empty = Table::new(["k", "lambda"]);
        assert_eq!(write_report(&empty, Format::Csv), "k,lambda\n");
    }

    #[test]
    fn json_output() {
        let mut t = Table::new(["k", "name", "ok", "none"]);
        t.push(vec![1.5.into(), "a\"b".into(), true.into(), Cell::Empty]);
        let out = write_report(&t, Format::Json);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v[0]["k"], 1.5);
        assert_eq!(v[0]["name"], "a\"b");
        assert_eq!(v[0]["ok"], true);
        assert!(v[0]["none"].is_null());
        assert_eq!(write_report(&Table::new(["k"]), Format::Json), "[]\n");
    }
}
