//! The observation matrix and its CSV form.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVectorView};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{hash_f64s, rng_from_seed};

/// `n × d` matrix of finite observations; column `j` holds samples of `X_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: DMatrix<f64>,
}

impl Dataset {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let n = values.nrows();
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos % n + 1,
                pos / n + 1
            )));
        }
        Ok(Dataset { values })
    }

    /// Builds from row-major data.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rows[bad].len(),
            });
        }
        Dataset::new(DMatrix::from_fn(n, d, |m, j| rows[m][j]))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> DVectorView<'_, f64> {
        self.values.column(j)
    }

    /// Sub-matrix with the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), cols.len(), |m, k| self.values[(m, cols[k])])
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            values: DMatrix::from_fn(rows.len(), self.d(), |m, j| self.values[(rows[m], j)]),
        }
    }

    /// Resamples `n` rows with replacement.
    pub fn bootstrap(&self, n: usize, seed: u64) -> Result<Dataset> {
        if self.n() == 0 {
            return Err(Error::invalid("cannot bootstrap an empty dataset"));
        }
        let mut rng = rng_from_seed(seed);
        let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..self.n())).collect();
        Ok(self.select_rows(&rows))
    }

    /// FNV-1a hash of the values, column-major.
    pub fn content_hash(&self) -> u64 {
        hash_f64s(self.values.iter())
    }

    /// CSV with header `x1,...,xd`; values at 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let d = self.d();
        let header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
        let mut out = header.join(",");
        out.push('\n');
        for m in 0..self.n() {
            let row: Vec<String> = (0..d)
                .map(|j| format!("{:.16e}", self.values[(m, j)]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Parses a headed numeric CSV. Diagnostics carry 1-based file lines
    /// (the header is line 1) and columns.
    pub fn from_csv_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let width = rdr
            .headers()
            .map_err(|e| Error::parse(1, e.to_string()))?
            .len();
        if width == 0 {
            return Err(Error::parse(1, "empty file"));
        }
        let mut rows = Vec::new();
        for (idx, record) in rdr.records().enumerate() {
            let line = idx + 2;
            let record = record.map_err(|e| Error::parse(line, e.to_string()))?;
            if record.len() != width {
                return Err(Error::parse(
                    line,
                    format!("ragged row: {} fields, header has {width}", record.len()),
                ));
            }
            let row = record
                .iter()
                .enumerate()
                .map(|(col, cell)| match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::parse(
                        line,
                        format!("column {}: `{cell}` is not a finite number", col + 1),
                    )),
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::parse(2, "no data rows"));
        }
        Dataset::from_rows(&rows)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path)?;
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return Err(Error::parse(1, "empty file"));
        }
        Dataset::from_csv_reader(bytes.as_slice())
    }
}
