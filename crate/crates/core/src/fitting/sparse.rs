use ndarray::Array2;

/// Compressed sparse row matrix. Column indices within a row are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Entries are sorted; duplicates summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = indices.len();
            for (c, v) in row {
                assert!(c < ncols, "column {c} out of range for {ncols} columns");
                if indices.len() > start && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn empty(ncols: usize) -> Self {
        Self::from_rows(ncols, Vec::new())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[usize], &[f64])> + '_ {
        (0..self.nrows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |p| val[p])
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (c, v) in self.indices.iter().zip(&self.values) {
            out[*c] += v;
        }
        out
    }

    pub fn col_abs_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (c, v) in self.indices.iter().zip(&self.values) {
            out[*c] += v.abs();
        }
        out
    }

    /// Sum of squares of each column, i.e. the diagonal of `A^T A`.
    pub fn col_sq_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (c, v) in self.indices.iter().zip(&self.values) {
            out[*c] += v * v;
        }
        out
    }

    /// `A * diag(scale)`; entries that become exactly zero are dropped.
    pub fn scale_columns(&self, scale: &[f64]) -> CsrMatrix {
        assert_eq!(scale.len(), self.ncols);
        let rows = self
            .rows()
            .map(|(idx, val)| {
                idx.iter()
                    .zip(val)
                    .map(|(&c, &v)| (c, v * scale[c]))
                    .filter(|e| e.1 != 0.0)
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(self.ncols, rows)
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[&CsrMatrix]) -> CsrMatrix {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        let mut out = CsrMatrix {
            nrows: 0,
            ncols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        };
        for b in blocks {
            assert_eq!(b.ncols, ncols, "vstack of matrices with differing widths");
            let base = out.indices.len();
            out.indices.extend_from_slice(&b.indices);
            out.values.extend_from_slice(&b.values);
            out.indptr.extend(b.indptr[1..].iter().map(|p| p + base));
            out.nrows += b.nrows;
        }
        out
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let (idx, val) = self.row(i);
            *yi = idx.iter().zip(val).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `y += A^T x`
    pub fn matvec_transpose_add(&self, x: &[f64], y: &mut [f64]) {
        for (i, xi) in x.iter().enumerate().take(self.nrows) {
            if *xi == 0.0 {
                continue;
            }
            let (idx, val) = self.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                y[c] += v * xi;
            }
        }
    }

    /// `A^T B` for a dense `B` with one row per row of `A`.
    pub fn transpose_mul_dense(&self, b: &Array2<f64>) -> Array2<f64> {
        assert_eq!(b.nrows(), self.nrows);
        let mut out = Array2::zeros((self.ncols, b.ncols()));
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            let brow = b.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                for (o, bv) in out.row_mut(c).iter_mut().zip(brow.iter()) {
                    *o += v * bv;
                }
            }
        }
        out
    }

    pub fn mul_dense(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut out = Array2::zeros((self.nrows, x.ncols()));
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            let mut orow = out.row_mut(i);
            for (&c, &v) in idx.iter().zip(val) {
                for (o, xv) in orow.iter_mut().zip(x.row(c).iter()) {
                    *o += v * xv;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                out[[i, c]] = v;
            }
        }
        out
    }
}
