use std::path::Path;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::par;

/// Row-major `M × N` matrix acting on a grid with `N` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    domain: GridShape,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, domain: GridShape) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if domain.len() != cols {
            return Err(Error::Shape(format!(
                "domain {:?} has {} cells, matrix has {cols} columns",
                domain.dims,
                domain.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("matrix has non-finite entries".into()));
        }
        Ok(Self { domain, rows, cols, data })
    }

    pub fn identity(domain: GridShape) -> Self {
        let n = domain.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { domain, rows: n, cols: n, data }
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            data[i * n + i] = d;
        }
        Self::new(n, n, data, GridShape::new(vec![n])?)
    }

    /// Parses `"M N"` followed by `M` rows of `N` whitespace-separated reals.
    ///
    /// Without an explicit `domain` the matrix acts on a 1-axis grid of length `N`.
    pub fn from_text(text: &str, domain: Option<GridShape>) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header token {t:?}"))))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse(format!("header must be \"M N\", got {header:?}")));
        };
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {}", r + 1)))?;
            let before = data.len();
            for t in line.split_whitespace() {
                data.push(t.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad value {t:?}", r + 1)))?);
            }
            if data.len() - before != cols {
                return Err(Error::Parse(format!(
                    "row {} has {} values, expected {cols}",
                    r + 1,
                    data.len() - before
                )));
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse(format!("more than {rows} rows")));
        }
        let domain = match domain {
            Some(d) => d,
            None => GridShape::new(vec![cols])?,
        };
        Self::new(rows, cols, data, domain)
    }

    pub fn from_file(path: impl AsRef<Path>, domain: Option<GridShape>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, domain)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl LinearOperator for DenseMatrix {
    fn domain(&self) -> &GridShape {
        &self.domain
    }

    fn range_size(&self) -> usize {
        self.rows
    }

    fn apply_flat(&self, x: &[f64], out: &mut [f64]) {
        let cols = self.cols;
        par::fill_indexed(out, |r| {
            self.data[r * cols..(r + 1) * cols]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum()
        });
    }

    fn adjoint_flat(&self, y: &[f64], out: &mut [f64]) {
        let cols = self.cols;
        par::fill_indexed(out, |c| (0..self.rows).map(|r| self.data[r * cols + c] * y[r]).sum());
    }
}
