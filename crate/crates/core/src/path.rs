use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Log-prices observed on the uniform grid `j / n`, `j = 0, ..., n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPricePath {
    values: Vec<f64>,
}

impl LogPricePath {
    /// Rejects any non-finite observation.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Multiply every observation by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * s).collect())
    }

    /// Read one column of a headed, comma-separated file.
    ///
    /// Rows are taken in file order. Empty or non-finite cells are rejected
    /// with their line number.
    pub fn from_csv_reader<R: Read>(reader: R, column: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = headers
            .iter()
            .position(|h| h.trim() == column)
            .ok_or_else(|| Error::Csv(format!("no column named '{column}' in header")))?;
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let cell = record
                .get(col)
                .ok_or_else(|| Error::Csv(format!("line {line}: missing column '{column}'")))?;
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Csv(format!("line {line}: cannot parse '{cell}' as a number"))
            })?;
            if !v.is_finite() {
                return Err(Error::Csv(format!(
                    "line {line}: non-finite value '{cell}'"
                )));
            }
            values.push(v);
        }
        Self::new(values)
    }

    pub fn from_csv_file(path: &Path, column: &str) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_reader(file, column)
    }

    /// Writes `index,logprice` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "logprice"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
