use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Tabular samples `(x_i, y_i)`, stored column-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

fn column_bounds(col: &[f64]) -> (f64, f64) {
    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo < hi {
        (lo, hi)
    } else {
        // a constant column still needs a non-empty box
        (lo - 0.5, hi + 0.5)
    }
}

impl Dataset {
    /// Builds a dataset from rows. Bounds default to the column ranges.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        let mut columns = vec![Vec::with_capacity(rows.len()); dim];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Input(format!(
                    "row {i} has {} columns, expected {dim}",
                    row.len()
                )));
            }
            for (c, v) in columns.iter_mut().zip(row) {
                c.push(*v);
            }
        }
        Self::from_columns(columns, y)
    }

    pub fn from_columns(columns: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::Input(format!("dataset needs at least 2 rows, got {n}")));
        }
        if columns.is_empty() {
            return Err(Error::Input("dataset needs at least one input column".into()));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(Error::Input(format!(
                    "column {j} has {} entries, response has {n}",
                    c.len()
                )));
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::Input(format!("non-finite value at row {i}, column {j}")));
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite response at row {i}")));
        }
        let (lower, upper) = columns.iter().map(|c| column_bounds(c)).unzip();
        Ok(Dataset {
            columns,
            y,
            lower,
            upper,
        })
    }

    /// Overrides the variable box used for the fitted model.
    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != self.dim() || upper.len() != self.dim() {
            return Err(Error::Input("bound vectors must match the column count".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Input("bounds must satisfy l < u".into()));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, v: usize) -> &[f64] {
        &self.columns[v]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Reads `x1,...,xV,y` CSV.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let width = headers.len();
        if width < 2 || &headers[width - 1] != "y" {
            return Err(Error::Dataset {
                row: 1,
                column: width,
                message: "header must be `x1,...,xV,y`".into(),
            });
        }
        let mut columns = vec![Vec::new(); width - 1];
        let mut y = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 2;
            if rec.len() != width {
                return Err(Error::Dataset {
                    row,
                    column: rec.len(),
                    message: format!("expected {width} fields"),
                });
            }
            for (j, cell) in rec.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| Error::Dataset {
                    row,
                    column: j + 1,
                    message: format!("`{cell}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Dataset {
                        row,
                        column: j + 1,
                        message: "non-finite value".into(),
                    });
                }
                if j + 1 == width {
                    y.push(v);
                } else {
                    columns[j].push(v);
                }
            }
        }
        Self::from_columns(columns, y)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.columns.iter().map(|c| c[i].to_string()).collect();
            rec.push(self.y[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let d = Dataset::from_rows(&[vec![0.1, 2.0], vec![0.3, -1.0], vec![1e-7, 5.5]], vec![1.0, 2.0, 3.0])
            .unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,y\n"));
        assert_eq!(Dataset::read_csv(&buf[..]).unwrap(), d);
        assert_eq!(d.lower(), &[1e-7, -1.0]);
        assert_eq!(d.upper(), &[0.3, 5.5]);
    }

    #[test]
    fn rejects_bad_cells() {
        let text = "x1,y\n1,2\n3,abc\n";
        match Dataset::read_csv(text.as_bytes()).unwrap_err() {
            Error::Dataset { row, column, .. } => assert_eq!((row, column), (3, 2)),
            e => panic!("unexpected {e}"),
        }
        assert!(Dataset::read_csv("a,b\n1,2\n3,4\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("x1,y\n1,2\n".as_bytes()).is_err());
        assert!(Dataset::from_rows(&[vec![1.0], vec![f64::NAN]], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn constant_column_gets_a_box() {
        let d = Dataset::from_rows(&[vec![2.0], vec![2.0], vec![2.0]], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(d.lower()[0] < d.upper()[0]);
    }
}
