//! CSV tables and two-column `.dat` files. Floats are written in Rust's
//! shortest round-trip form, so equal values give byte-identical reports.

use std::io::Write;
use std::path::Path;

use crate::Failure;

pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A header row and string records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, w: W) -> Result<(), Failure> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), Failure> {
        let file = std::fs::File::create(path)
            .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))?;
        self.write(std::io::BufWriter::new(file))
    }
}

/// Whitespace-separated `x y` lines for plotting.
pub fn save_dat(path: &Path, xs: &[f64], ys: &[f64]) -> Result<(), Failure> {
    let mut s = String::new();
    for (x, y) in xs.iter().zip(ys) {
        s.push_str(&format!("{x} {y}\n"));
    }
    std::fs::write(path, s).map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))
}
