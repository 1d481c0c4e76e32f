//! Banded symmetric factorization and banded Givens QR.
//!
//! With lexicographic column order, every row of the collocation and derivative matrices of a
//! tensor-product spline has its nonzeros inside a window of width `sum_k p_k * stride_k + 1`,
//! so both the normal matrix and the triangular factor of the stacked system are banded.

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Upper half-bandwidth of `A^T A`: the widest column spread of any row.
pub fn row_bandwidth(a: &CsrMatrix) -> usize {
    a.rows()
        .filter(|(idx, _)| !idx.is_empty())
        .map(|(idx, _)| idx[idx.len() - 1] - idx[0])
        .max()
        .unwrap_or(0)
}

/// Symmetric matrix stored as its upper band: `data[i * (bw + 1) + k] = A(i, i + k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        if j - i > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (j - i)]
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * (self.bw + 1)]).collect()
    }

    /// `self += A^T A`. Panics if a row of `A` is wider than the band.
    pub fn add_gram(&mut self, a: &CsrMatrix) {
        assert_eq!(a.ncols(), self.n);
        let w = self.bw + 1;
        for (idx, val) in a.rows() {
            for p in 0..idx.len() {
                let (ci, vi) = (idx[p], val[p]);
                let base = ci * w;
                for q in p..idx.len() {
                    let off = idx[q] - ci;
                    assert!(off <= self.bw, "row exceeds band");
                    self.data[base + off] += vi * val[q];
                }
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for k in 1..w.min(self.n - i) {
                y[i] += row[k] * x[i + k];
                y[i + k] += row[k] * x[i];
            }
        }
        y
    }

    /// Banded Cholesky `A = U^T U`. A pivot at or below `n * eps * max(diag)` means the
    /// matrix is numerically singular.
    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let n = self.n;
        let w = self.bw + 1;
        let max_diag = self.diag().into_iter().fold(0.0f64, f64::max);
        let tol = n as f64 * f64::EPSILON * max_diag;
        let data = &mut self.data;
        for i in 0..n {
            let piv = data[i * w];
            if !(piv > tol) {
                return Err(Error::RankDeficient { column: i, pivot: piv });
            }
            let r = piv.sqrt();
            let reach = w.min(n - i);
            data[i * w] = r;
            for k in 1..reach {
                data[i * w + k] /= r;
            }
            let (head, tail) = data.split_at_mut((i + 1) * w);
            let urow = &head[i * w..];
            for a in 1..reach {
                let uij = urow[a];
                if uij == 0.0 {
                    continue;
                }
                let jrow = &mut tail[(a - 1) * w..(a - 1) * w + (reach - a)];
                for (dst, &u) in jrow.iter_mut().zip(&urow[a..reach]) {
                    *dst -= uij * u;
                }
            }
        }
        Ok(BandedCholesky {
            n,
            bw: self.bw,
            data: self.data,
        })
    }
}

/// Upper banded Cholesky factor.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    /// Solves `U^T U x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let w = self.bw + 1;
        let n = self.n;
        for i in 0..n {
            let row = &self.data[i * w..(i + 1) * w];
            let yi = b[i] / row[0];
            b[i] = yi;
            for k in 1..w.min(n - i) {
                b[i + k] -= row[k] * yi;
            }
        }
        for i in (0..n).rev() {
            let row = &self.data[i * w..(i + 1) * w];
            let mut s = b[i];
            for k in 1..w.min(n - i) {
                s -= row[k] * b[i + k];
            }
            b[i] = s / row[0];
        }
    }
}

/// Row-by-row Givens QR of a banded least-squares problem `min ||A x - B||`.
///
/// Rows must be fed in nondecreasing order of their first nonzero column; then every
/// incoming row is annihilated within `bw + 1` rotations.
#[derive(Debug, Clone)]
pub struct BandedQr {
    n: usize,
    bw: usize,
    nrhs: usize,
    r: Vec<f64>,
    rhs: Vec<f64>,
    filled: Vec<bool>,
    buf: Vec<f64>,
    rbuf: Vec<f64>,
}

impl BandedQr {
    pub fn new(n: usize, bw: usize, nrhs: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            nrhs,
            r: vec![0.0; n * (bw + 1)],
            rhs: vec![0.0; n * nrhs],
            filled: vec![false; n],
            buf: vec![0.0; bw + 1],
            rbuf: vec![0.0; nrhs],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Merges one row `(idx, val)` with right-hand side `b` into the factor.
    pub fn add_row(&mut self, idx: &[usize], val: &[f64], b: &[f64]) {
        debug_assert_eq!(b.len(), self.nrhs);
        if idx.is_empty() {
            return;
        }
        let w = self.bw + 1;
        let mut k = idx[0];
        self.buf.iter_mut().for_each(|v| *v = 0.0);
        for (&c, &v) in idx.iter().zip(val) {
            assert!(c - k < w, "row exceeds band");
            self.buf[c - k] = v;
        }
        self.rbuf.copy_from_slice(b);
        loop {
            while self.buf[0] == 0.0 {
                if self.buf.iter().all(|v| *v == 0.0) {
                    return;
                }
                self.shift();
                k += 1;
            }
            if k >= self.n {
                return;
            }
            let reach = w.min(self.n - k);
            if !self.filled[k] {
                self.r[k * w..k * w + reach].copy_from_slice(&self.buf[..reach]);
                self.rhs[k * self.nrhs..(k + 1) * self.nrhs].copy_from_slice(&self.rbuf);
                self.filled[k] = true;
                return;
            }
            let rkk = self.r[k * w];
            let x0 = self.buf[0];
            let h = rkk.hypot(x0);
            let (c, s) = (rkk / h, x0 / h);
            let rrow = &mut self.r[k * w..k * w + reach];
            for (rv, xv) in rrow.iter_mut().zip(self.buf.iter_mut()) {
                let (a, b) = (*rv, *xv);
                *rv = c * a + s * b;
                *xv = c * b - s * a;
            }
            self.buf[0] = 0.0;
            let rhs = &mut self.rhs[k * self.nrhs..(k + 1) * self.nrhs];
            for (rv, xv) in rhs.iter_mut().zip(self.rbuf.iter_mut()) {
                let (a, b) = (*rv, *xv);
                *rv = c * a + s * b;
                *xv = c * b - s * a;
            }
        }
    }

    fn shift(&mut self) {
        self.buf.rotate_left(1);
        let last = self.buf.len() - 1;
        self.buf[last] = 0.0;
    }

    /// Diagonal of `R`; rows that never received data are zero.
    pub fn diag(&self) -> Vec<f64> {
        let w = self.bw + 1;
        (0..self.n).map(|i| self.r[i * w]).collect()
    }

    /// `R(i, j)` for `j >= i`.
    pub fn r_entry(&self, i: usize, j: usize) -> f64 {
        if j < i || j - i > self.bw {
            0.0
        } else {
            self.r[i * (self.bw + 1) + (j - i)]
        }
    }

    /// Drops every unknown whose diagonal is at or below `rcond * max|R_ii|`. The rest of
    /// that row of `R` is rotated back into the later rows, so what remains is the exact
    /// factor of the problem with the dropped columns deleted. Returns the number dropped.
    pub fn deflate(&mut self, rcond: f64) -> usize {
        let w = self.bw + 1;
        let n = self.n;
        let tol = rcond * self.diag().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut dropped = 0;
        let mut idx = Vec::with_capacity(w);
        let mut val = Vec::with_capacity(w);
        for k in 0..n {
            if self.filled[k] && self.r[k * w].abs() > tol {
                continue;
            }
            dropped += 1;
            if !self.filled[k] {
                continue;
            }
            idx.clear();
            val.clear();
            for j in 1..w.min(n - k) {
                let v = self.r[k * w + j];
                if v != 0.0 {
                    idx.push(k + j);
                    val.push(v);
                }
            }
            let b = self.rhs[k * self.nrhs..(k + 1) * self.nrhs].to_vec();
            self.r[k * w..(k + 1) * w].iter_mut().for_each(|v| *v = 0.0);
            self.rhs[k * self.nrhs..(k + 1) * self.nrhs].iter_mut().for_each(|v| *v = 0.0);
            self.filled[k] = false;
            self.add_row(&idx, &val, &b);
        }
        dropped
    }

    /// Back substitution; unknowns whose row of `R` is empty are set to zero.
    /// Returns the solution as `n x nrhs`, row-major.
    pub fn solve(&self) -> Vec<f64> {
        let w = self.bw + 1;
        let n = self.n;
        let mut x = vec![0.0; n * self.nrhs];
        for i in (0..n).rev() {
            let rii = self.r[i * w];
            if !self.filled[i] || rii == 0.0 {
                continue;
            }
            for c in 0..self.nrhs {
                let mut s = self.rhs[i * self.nrhs + c];
                for k in 1..w.min(n - i) {
                    s -= self.r[i * w + k] * x[(i + k) * self.nrhs + c];
                }
                x[i * self.nrhs + c] = s / rii;
            }
        }
        x
    }

    /// Basic least-squares solution: [`deflate`](Self::deflate) then [`solve`](Self::solve).
    pub fn basic_solution(&mut self, rcond: f64) -> (Vec<f64>, usize) {
        let dropped = self.deflate(rcond);
        (self.solve(), dropped)
    }

    /// `R^T R x = b` in place (assumes a nonsingular `R`).
    pub fn normal_solve_in_place(&self, b: &mut [f64]) {
        let w = self.bw + 1;
        let n = self.n;
        for i in 0..n {
            let yi = b[i] / self.r[i * w];
            b[i] = yi;
            for k in 1..w.min(n - i) {
                b[i + k] -= self.r[i * w + k] * yi;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in 1..w.min(n - i) {
                s -= self.r[i * w + k] * b[i + k];
            }
            b[i] = s / self.r[i * w];
        }
    }

    /// `R x`
    pub fn r_mul(&self, x: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        (0..self.n)
            .map(|i| (0..w.min(self.n - i)).map(|k| self.r[i * w + k] * x[i + k]).sum())
            .collect()
    }

    /// `R^T x`
    pub fn rt_mul(&self, x: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for k in 0..w.min(self.n - i) {
                y[i + k] += self.r[i * w + k] * x[i];
            }
        }
        y
    }
}

/// Feeds all rows of `a` (with right-hand sides from `b`, row-major `nrows x nrhs`) into a
/// banded QR in order of first nonzero column.
pub fn banded_qr(a: &CsrMatrix, b: Option<&[f64]>, nrhs: usize) -> BandedQr {
    let bw = row_bandwidth(a);
    let mut qr = BandedQr::new(a.ncols(), bw, nrhs);
    let mut order: Vec<usize> = (0..a.nrows()).filter(|&i| !a.row(i).0.is_empty()).collect();
    order.sort_by_key(|&i| a.row(i).0[0]);
    let zeros = vec![0.0; nrhs];
    for i in order {
        let (idx, val) = a.row(i);
        let rhs = b.map_or(&zeros[..], |b| &b[i * nrhs..(i + 1) * nrhs]);
        qr.add_row(idx, val, rhs);
    }
    qr
}
