//! Plain numeric CSV tables: header row, comma separated, LF line endings,
//! every value in scientific notation with 17 significant digits.

use std::path::Path;

use crate::error::{Error, Result};

/// Named equal-length columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, header: impl Into<String>, column: Vec<f64>) -> &mut Self {
        self.headers.push(header.into());
        self.columns.push(column);
        self
    }

    pub fn with(mut self, header: impl Into<String>, column: Vec<f64>) -> Self {
        self.push(header, column);
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, header: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == header)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let n = self.rows();
        if self.columns.iter().any(|c| c.len() != n) || self.headers.len() != self.columns.len() {
            return Err(Error::Structural("table columns differ in length".into()));
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Structural(format!("csv: {e}"));
        w.write_record(&self.headers).map_err(io)?;
        for i in 0..n {
            w.write_record(self.columns.iter().map(|c| format_value(c[i]))).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Structural(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let bad = |e: String| Error::Structural(format!("csv: {e}"));
        let headers: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
        let mut columns = vec![Vec::new(); headers.len()];
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            for (col, field) in columns.iter_mut().zip(rec.iter()) {
                col.push(field.parse::<f64>().map_err(|e| bad(format!("{field:?}: {e}")))?);
            }
        }
        Ok(Self { headers, columns })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}
