//! Rectangular result tables and their CSV / JSON-lines encodings.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::config::Format;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Int,
    Real,
    Complex,
    Text,
}

impl ColumnKind {
    fn name(self) -> &'static str {
        match self {
            ColumnKind::Int => "int",
            ColumnKind::Real => "real",
            ColumnKind::Complex => "complex",
            ColumnKind::Text => "text",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "int" => ColumnKind::Int,
            "real" => ColumnKind::Real,
            "complex" => ColumnKind::Complex,
            "text" => ColumnKind::Text,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Complex(C64),
    Text(String),
}

impl Cell {
    fn kind(&self) -> ColumnKind {
        match self {
            Cell::Int(_) => ColumnKind::Int,
            Cell::Real(_) => ColumnKind::Real,
            Cell::Complex(_) => ColumnKind::Complex,
            Cell::Text(_) => ColumnKind::Text,
        }
    }

    /// Bitwise equality, so that `NaN` cells compare equal after a round trip.
    fn same(&self, other: &Cell) -> bool {
        match (self, other) {
            (Cell::Real(a), Cell::Real(b)) => a.to_bits() == b.to_bits(),
            (Cell::Complex(a), Cell::Complex(b)) => {
                a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
            }
            (a, b) => a == b,
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<C64> for Cell {
    fn from(v: C64) -> Self {
        Cell::Complex(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("row {row} has {got} cells, table has {expected} columns")]
    Width { row: usize, got: usize, expected: usize },
    #[error("row {row}, column '{column}': expected {expected}")]
    Kind { row: usize, column: String, expected: &'static str },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed table record at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug)]
pub struct ResultTable {
    schema: String,
    columns: Vec<(String, ColumnKind)>,
    rows: Vec<Vec<Cell>>,
}

impl PartialEq for ResultTable {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.columns == other.columns
            && self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.same(y)))
    }
}

impl ResultTable {
    pub fn new(schema: &str, columns: &[(&str, ColumnKind)]) -> Self {
        Self {
            schema: schema.to_string(),
            columns: columns.iter().map(|(n, k)| (n.to_string(), *k)).collect(),
            rows: Vec::new(),
        }
    }

    pub fn schema(&self) -> &str {
        &self.schema
    }

    pub fn columns(&self) -> &[(String, ColumnKind)] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), TableError> {
        let r = self.rows.len();
        if row.len() != self.columns.len() {
            return Err(TableError::Width {
                row: r,
                got: row.len(),
                expected: self.columns.len(),
            });
        }
        for (cell, (name, kind)) in row.iter().zip(&self.columns) {
            if cell.kind() != *kind {
                return Err(TableError::Kind {
                    row: r,
                    column: name.clone(),
                    expected: kind.name(),
                });
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Index of a column by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.0 == name)
    }

    /// Real values of a column, in row order.
    pub fn reals(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column(name)?;
        self.rows
            .iter()
            .map(|r| match &r[i] {
                Cell::Real(x) => Some(*x),
                Cell::Int(x) => Some(*x as f64),
                _ => None,
            })
            .collect()
    }

    /// CSV header: complex columns expand to `name_re, name_im`.
    pub fn csv_header(&self) -> Vec<String> {
        self.columns
            .iter()
            .flat_map(|(n, k)| match k {
                ColumnKind::Complex => vec![format!("{n}_re"), format!("{n}_im")],
                _ => vec![n.clone()],
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(self.csv_header())?;
        for row in &self.rows {
            let mut rec: Vec<String> = Vec::with_capacity(row.len() + 2);
            for cell in row {
                match cell {
                    Cell::Int(i) => rec.push(i.to_string()),
                    Cell::Real(x) => rec.push(real_text(*x)),
                    Cell::Complex(z) => {
                        rec.push(real_text(z.re));
                        rec.push(real_text(z.im));
                    }
                    Cell::Text(s) => rec.push(s.clone()),
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// First line: `{"schema", "columns"}`; then one JSON array per row with
    /// complex cells as `[re, im]` and non-finite reals as strings.
    pub fn write_json_lines<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header = json!({
            "schema": self.schema,
            "columns": self.columns.iter().map(|(n, k)| json!({"name": n, "kind": k.name()})).collect::<Vec<_>>(),
        });
        writeln!(out, "{header}")?;
        for row in &self.rows {
            let cells: Vec<Value> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(i) => json!(i),
                    Cell::Real(x) => json_real(*x),
                    Cell::Complex(z) => json!([json_real(z.re), json_real(z.im)]),
                    Cell::Text(s) => json!(s),
                })
                .collect();
            writeln!(out, "{}", Value::Array(cells))?;
        }
        Ok(())
    }

    pub fn read_json_lines<R: BufRead>(input: R) -> Result<Self, TableError> {
        let parse_err = |line: usize, message: String| TableError::Parse { line, message };
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input".into()))?;
        let header: Value = serde_json::from_str(&header.map_err(|e| parse_err(1, e.to_string()))?)
            .map_err(|e| parse_err(1, e.to_string()))?;
        let schema = header["schema"].as_str().ok_or_else(|| parse_err(1, "missing schema".into()))?;
        let columns: Vec<(String, ColumnKind)> = header["columns"]
            .as_array()
            .ok_or_else(|| parse_err(1, "missing columns".into()))?
            .iter()
            .map(|c| {
                let name = c["name"].as_str()?.to_string();
                let kind = ColumnKind::parse(c["kind"].as_str()?)?;
                Some((name, kind))
            })
            .collect::<Option<_>>()
            .ok_or_else(|| parse_err(1, "bad column record".into()))?;
        let mut table = ResultTable {
            schema: schema.to_string(),
            columns,
            rows: Vec::new(),
        };
        for (i, line) in lines {
            let line = line.map_err(|e| parse_err(i + 1, e.to_string()))?;
            let v: Value = serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?;
            let cells = v.as_array().ok_or_else(|| parse_err(i + 1, "row is not an array".into()))?;
            if cells.len() != table.columns.len() {
                return Err(parse_err(i + 1, "row width differs from header".into()));
            }
            let row = cells
                .iter()
                .zip(&table.columns)
                .map(|(c, (_, k))| match k {
                    ColumnKind::Int => c.as_i64().map(Cell::Int),
                    ColumnKind::Real => read_real(c).map(Cell::Real),
                    ColumnKind::Complex => {
                        let a = c.as_array()?;
                        (a.len() == 2).then_some(())?;
                        Some(Cell::Complex(C64::new(read_real(&a[0])?, read_real(&a[1])?)))
                    }
                    ColumnKind::Text => c.as_str().map(|s| Cell::Text(s.to_string())),
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| parse_err(i + 1, "cell does not match its column kind".into()))?;
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn encode(&self, format: Format) -> Vec<u8> {
        let mut buf = Vec::new();
        match format {
            Format::Csv => self.write_csv(&mut buf).expect("writing to memory"),
            Format::JsonLines => self.write_json_lines(&mut buf).expect("writing to memory"),
        }
        buf
    }
}

/// Full-precision scientific notation.
fn real_text(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("NaN")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn read_real(v: &Value) -> Option<f64> {
    match v {
        Value::String(s) => match s.as_str() {
            "NaN" => Some(f64::NAN),
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            _ => None,
        },
        other => other.as_f64(),
    }
}

/// Writes `table` to `dir/<prefix><schema>.<ext>` and returns the path.
pub fn emit(table: &ResultTable, dir: &Path, prefix: &str, format: Format) -> Result<std::path::PathBuf, TableError> {
    let path = dir.join(format!("{prefix}{}.{}", table.schema, format.extension()));
    let io_err = |source| TableError::Io {
        path: path.display().to_string(),
        source,
    };
    fs::create_dir_all(dir).map_err(io_err)?;
    fs::write(&path, table.encode(format)).map_err(io_err)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::new(
            "demo",
            &[("n", ColumnKind::Int), ("x", ColumnKind::Real), ("g", ColumnKind::Complex), ("tag", ColumnKind::Text)],
        );
        t.push(vec![2usize.into(), 0.1.into(), C64::new(1.0 / 3.0, -2e-300).into(), "a,b".into()])
            .unwrap();
        t.push(vec![4usize.into(), f64::NAN.into(), C64::new(f64::INFINITY, 0.0).into(), "".into()])
            .unwrap();
        t
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::new("empty", &[("t", ColumnKind::Real), ("g", ColumnKind::Complex)]);
        assert_eq!(String::from_utf8(t.encode(Format::Csv)).unwrap(), "t,g_re,g_im\n");
    }

    #[test]
    fn csv_layout() {
        let text = String::from_utf8(sample().encode(Format::Csv)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,x,g_re,g_im,tag");
        assert_eq!(lines[1], "2,1.0000000000000001e-1,3.3333333333333331e-1,-2.0000000000000001e-300,\"a,b\"");
    }

    #[test]
    fn json_lines_round_trip() {
        let t = sample();
        let bytes = t.encode(Format::JsonLines);
        let back = ResultTable::read_json_lines(bytes.as_slice()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.encode(Format::JsonLines), bytes);
    }

    #[test]
    fn rows_are_checked() {
        let mut t = ResultTable::new("x", &[("n", ColumnKind::Int)]);
        assert!(t.push(vec![1.0.into()]).is_err());
        assert!(t.push(vec![]).is_err());
    }
}
