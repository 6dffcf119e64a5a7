//! Column-named tables with CSV round-tripping.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! written file reproduces every value bit for bit.

use std::fmt;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("row has {got} cells, header has {want}")]
    RowWidth { got: usize, want: usize },
    #[error("no column named {0:?}")]
    MissingColumn(String),
    #[error("column {0:?} is not numeric")]
    NotNumeric(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }

    fn parse(s: &str) -> Cell {
        if let Ok(i) = s.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(x) = s.parse::<f64>() {
            Cell::Num(x)
        } else {
            Cell::Text(s.to_string())
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Num(x) => write!(f, "{x:?}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
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
impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(if x { "true" } else { "false" }.into())
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}
impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}
impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Text(String::new()), Cell::Num)
    }
}
impl From<Option<usize>> for Cell {
    fn from(x: Option<usize>) -> Self {
        x.map_or(Cell::Text(String::new()), |v| Cell::Int(v as i64))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), TableError> {
        if row.len() != self.header.len() {
            return Err(TableError::RowWidth { got: row.len(), want: self.header.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, TableError> {
        self.header.iter().position(|h| h == name).ok_or_else(|| TableError::MissingColumn(name.into()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, TableError> {
        let i = self.index_of(name)?;
        self.rows
            .iter()
            .map(|r| r[i].as_f64().ok_or_else(|| TableError::NotNumeric(name.into())))
            .collect()
    }

    /// Appends `<name>_norm` holding the min-max normalized copy of each
    /// listed column. A constant column normalizes to 0.5.
    pub fn add_normalized(&mut self, names: &[&str]) -> Result<(), TableError> {
        for name in names {
            let norm = normalize(&self.column(name)?);
            self.header.push(format!("{name}_norm"));
            for (row, v) in self.rows.iter_mut().zip(norm) {
                row.push(Cell::Num(v));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), TableError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(|c| c.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), TableError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Self, TableError> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.iter().map(String::from).collect::<Vec<_>>();
        let mut t = Table { header, rows: Vec::new() };
        for rec in rd.records() {
            let rec = rec?;
            t.push(rec.iter().map(Cell::parse).collect())?;
        }
        Ok(t)
    }

    pub fn load_csv(path: &Path) -> Result<Self, TableError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Min-max normalization; a constant (or empty) input maps to 0.5.
pub fn normalize(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.5; v.len()];
    }
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(["t", "f", "name"]);
        t.push(vec![0usize.into(), 0.1.into(), "a,b".into()]).unwrap();
        t.push(vec![1usize.into(), 1e-300.into(), "c".into()]).unwrap();
        assert_eq!(t.to_csv_string(), "t,f,name\n0,0.1,\"a,b\"\n1,1e-300,c\n");
    }

    #[test]
    fn width_checked() {
        let mut t = Table::new(["a"]);
        assert!(matches!(t.push(vec![1.0.into(), 2.0.into()]), Err(TableError::RowWidth { .. })));
    }

    #[test]
    fn normalized_columns() {
        let mut t = Table::new(["x", "c"]);
        for x in [2.0, 4.0, 3.0] {
            t.push(vec![x.into(), 1.0.into()]).unwrap();
        }
        t.add_normalized(&["x", "c"]).unwrap();
        assert_eq!(t.column("x_norm").unwrap(), vec![0.0, 1.0, 0.5]);
        assert_eq!(t.column("c_norm").unwrap(), vec![0.5; 3]);
    }

    proptest! {
        #[test]
        fn roundtrip_bits(xs in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 1..20)) {
            let mut t = Table::new(["t", "x"]);
            for (i, x) in xs.iter().enumerate() {
                t.push(vec![i.into(), (*x).into()]).unwrap();
            }
            let back = Table::read_csv(t.to_csv_string().as_bytes()).unwrap();
            let got = back.column("x").unwrap();
            for (a, b) in xs.iter().zip(got) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
