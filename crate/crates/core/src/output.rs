//! CSV tables with a fixed float format.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

/// Ten significant digits, `.` as decimal separator, scientific notation
/// only for very large or very small magnitudes.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.9e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Float(v) => f.write_str(&fmt_float(*v)),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: ToString>(header: &[S]) -> Self {
        Self { header: header.iter().map(ToString::to_string).collect(), rows: Vec::new() }
    }

    /// Panics when the row width does not match the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Rows whose text cells match every `(column, value)` pair.
    pub fn select<'a>(&'a self, filters: &'a [(&'a str, &'a str)]) -> impl Iterator<Item = &'a Vec<Cell>> {
        self.rows.iter().filter(move |row| {
            filters.iter().all(|(col, want)| {
                self.column(col).is_some_and(|i| row[i].to_string() == *want)
            })
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(ToString::to_string))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Sidecar describing how a CSV was produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    /// Fully expanded configuration, when the command read one.
    pub config: Option<serde_json::Value>,
    pub tool_version: String,
    pub seeds: Vec<u64>,
    pub output: String,
    pub duration_s: f64,
}

impl RunManifest {
    /// `<out>.manifest.json` next to the CSV.
    pub fn path_for(out: &Path) -> std::path::PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        name.into()
    }

    pub fn write(&self, out: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(Self::path_for(out), text + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(fmt_float(0.2727272727272727), "0.2727272727");
        assert_eq!(fmt_float(1.1783), "1.178300000");
        assert_eq!(fmt_float(-0.5), "-0.5000000000");
        assert_eq!(fmt_float(1234.5), "1234.500000");
        assert_eq!(fmt_float(1e-9), "1.000000000e-9");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(f64::NAN), "NaN");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![0.5.into(), 3u64.into(), Cell::Empty]);
        t.push(vec!["x,y".into(), Cell::Int(-1), None::<f64>.into()]);
        assert_eq!(t.to_csv_string(), "a,b,c\n0.5000000000,3,\n\"x,y\",-1,\n");
        assert_eq!(t.select(&[("b", "3")]).count(), 1);
    }
}
