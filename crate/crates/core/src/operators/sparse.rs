use crate::par;

/// Compressed-row weight matrix stored alongside its transpose.
///
/// Both directions are row sweeps over their own storage, so forward and
/// adjoint products parallelize without shared accumulation and sum in a
/// fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
    t_ptr: Vec<usize>,
    t_idx: Vec<usize>,
    t_vals: Vec<f64>,
}

impl WeightMatrix {
    /// Builds from per-row `(column, weight)` lists. Repeated columns
    /// within a row are summed; zero weights are dropped.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, w) in row {
                debug_assert!(c < cols);
                if last == Some(c) {
                    *vals.last_mut().unwrap() += w;
                } else {
                    col_idx.push(c);
                    vals.push(w);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        // drop explicit zeros
        let mut keep_ptr = vec![0usize; n_rows + 1];
        let mut k_idx = Vec::with_capacity(col_idx.len());
        let mut k_vals = Vec::with_capacity(vals.len());
        for r in 0..n_rows {
            for k in row_ptr[r]..row_ptr[r + 1] {
                if vals[k] != 0.0 {
                    k_idx.push(col_idx[k]);
                    k_vals.push(vals[k]);
                }
            }
            keep_ptr[r + 1] = k_idx.len();
        }
        let (row_ptr, col_idx, vals) = (keep_ptr, k_idx, k_vals);

        let mut counts = vec![0usize; cols + 1];
        for &c in &col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..cols {
            counts[c + 1] += counts[c];
        }
        let t_ptr = counts.clone();
        let mut next = counts;
        let mut t_idx = vec![0; col_idx.len()];
        let mut t_vals = vec![0.0; vals.len()];
        for r in 0..n_rows {
            for k in row_ptr[r]..row_ptr[r + 1] {
                let c = col_idx[k];
                t_idx[next[c]] = r;
                t_vals[next[c]] = vals[k];
                next[c] += 1;
            }
        }
        Self {
            rows: n_rows,
            cols,
            row_ptr,
            col_idx,
            vals,
            t_ptr,
            t_idx,
            t_vals,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero `(column, weight)` pairs of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        par::fill_indexed(out, |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(|k| self.vals[k] * x[self.col_idx[k]])
                .sum()
        });
    }

    pub fn mul_transpose(&self, y: &[f64], out: &mut [f64]) {
        par::fill_indexed(out, |c| {
            (self.t_ptr[c]..self.t_ptr[c + 1])
                .map(|k| self.t_vals[k] * y[self.t_idx[k]])
                .sum()
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicates_and_transposes() {
        let m = WeightMatrix::from_rows(3, vec![vec![(2, 1.0), (0, 2.0), (2, 0.5)], vec![], vec![(1, 0.0), (1, 4.0)]]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.row(0).collect::<Vec<_>>(), vec![(0, 2.0), (2, 1.5)]);
        let mut y = vec![0.0; 3];
        m.mul(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![6.5, 0.0, 8.0]);
        let mut x = vec![0.0; 3];
        m.mul_transpose(&[1.0, 5.0, -1.0], &mut x);
        assert_eq!(x, vec![2.0, -4.0, 1.5]);
    }
}
