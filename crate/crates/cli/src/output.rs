use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Scientific notation with `digits` significant figures.
pub fn num(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), x)
}

/// A CSV file: one `#` comment line, a header line, then rows.
pub struct Csv {
    pub path: PathBuf,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    digits: usize,
}

impl Csv {
    pub fn new(dir: &Path, name: &str, header: &[&str], digits: usize) -> Self {
        Self { path: dir.join(name), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), digits }
    }

    pub fn row(&mut self) -> Row<'_> {
        self.rows.push(Vec::with_capacity(self.header.len()));
        let digits = self.digits;
        Row { cells: self.rows.last_mut().unwrap(), digits }
    }

    pub fn write(&self, comment: &str) -> Result<PathBuf, CliError> {
        for r in &self.rows {
            debug_assert_eq!(r.len(), self.header.len());
        }
        let mut file = BufWriter::new(File::create(&self.path)?);
        writeln!(file, "# {comment}")?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(self.path.clone())
    }
}

pub struct Row<'a> {
    cells: &'a mut Vec<String>,
    digits: usize,
}

impl Row<'_> {
    pub fn f(self, x: f64) -> Self {
        self.cells.push(num(x, self.digits));
        self
    }

    pub fn i(self, x: impl Into<i64>) -> Self {
        self.cells.push(x.into().to_string());
        self
    }

    pub fn u(self, x: usize) -> Self {
        self.cells.push(x.to_string());
        self
    }

    pub fn b(self, x: bool) -> Self {
        self.cells.push(x.to_string());
        self
    }

    pub fn s(self, x: &str) -> Self {
        self.cells.push(x.to_string());
        self
    }
}
