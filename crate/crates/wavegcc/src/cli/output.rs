//! CSV tables, manifest and plot script.

use crate::error::Result;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
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

/// 17 significant digits; infinities as `+inf` / `-inf`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "+inf".into()
        } else {
            "-inf".into()
        }
    } else if v == 0.0 {
        format!("{:.16e}", 0.0)
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        // Writing to memory cannot fail.
        w.write_record(&self.header).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(v) => format_float(*v),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s.clone(),
            }))
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 cells")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Python script plotting every numeric column of each table against its
/// first column.
pub fn plot_script(tables: &[Table]) -> String {
    let mut s = String::from(
        "import csv\nimport matplotlib.pyplot as plt\n\n\ndef load(path):\n    with open(path) as f:\n        rows = list(csv.reader(f))\n    return rows[0], rows[1:]\n\n\ndef num(v):\n    try:\n        return float(v)\n    except ValueError:\n        return None\n\n",
    );
    for t in tables {
        let _ = write!(
            s,
            "\nheader, rows = load(\"{file}\")\nfig, ax = plt.subplots()\nx = [num(r[0]) for r in rows]\nfor j, name in enumerate(header[1:], start=1):\n    y = [num(r[j]) for r in rows]\n    if all(v is not None for v in x + y):\n        ax.plot(x, y, marker=\"o\", label=name)\nax.set_xlabel(header[0])\nax.set_title(\"{name}\")\nax.legend(fontsize=\"small\")\nfig.savefig(\"{name}.png\", dpi=120)\n",
            file = t.file_name(),
            name = t.name
        );
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(f64::INFINITY), "+inf");
        assert_eq!(format_float(-0.0), format_float(0.0));
        assert_eq!(format_float(-2.5), "-2.5000000000000000e0");
        let back: f64 = format_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("demo", &["T", "label"]);
        t.push(vec![1.0.into(), "a,b".into()]);
        t.push(vec![2usize.into(), true.into()]);
        assert_eq!(t.to_csv(), "T,label\n1.0000000000000000e0,\"a,b\"\n2,true\n");
        assert!(plot_script(&[t]).contains("demo.csv"));
    }
}
