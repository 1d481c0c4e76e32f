use ndarray::Array2;

use super::assembly::DesignMatrices;
use super::banded::{BandedQr, BandedSpd};
use super::config::{SolverKind, AUTO_DIRECT_LIMIT};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Settings for [`solve`]; a subset of the fit configuration.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub solver: SolverKind,
    pub tol: f64,
    pub max_iter: usize,
    pub qr_rcond: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            solver: SolverKind::Auto,
            tol: 1e-10,
            max_iter: 20_000,
            qr_rcond: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// `n_tot x s`
    pub control_points: Array2<f64>,
    /// The solver actually run (never `Auto`).
    pub solver: SolverKind,
    /// Largest CG iteration count over value components (0 for direct solvers).
    pub iterations: usize,
    /// Unknowns fixed at zero by the QR basic solution.
    pub dropped: usize,
}

/// Penalty blocks `M * Lambda` that are not identically zero.
pub fn scaled_penalties(
    mats: &DesignMatrices,
    lambda1: &[f64],
    lambda2: &[f64],
) -> Vec<CsrMatrix> {
    let mut out = Vec::new();
    for (m, l) in [(&mats.m2, lambda2), (&mats.m1, lambda1)] {
        if let Some(m) = m {
            if l.iter().any(|v| *v != 0.0) {
                out.push(m.scale_columns(l));
            }
        }
    }
    out
}

/// The stacked least-squares matrix `(N; M2 Lambda2; M1 Lambda1)`, omitting zero blocks.
pub fn stacked_matrix(mats: &DesignMatrices, lambda1: &[f64], lambda2: &[f64]) -> CsrMatrix {
    let pens = scaled_penalties(mats, lambda1, lambda2);
    let mut blocks = vec![&mats.n];
    blocks.extend(pens.iter());
    CsrMatrix::vstack(&blocks)
}

/// Upper half-bandwidth of the normal matrix for tensor bases of the given degrees.
pub fn tensor_bandwidth(degrees: &[usize], control_dims: &[usize]) -> usize {
    let mut stride = 1;
    let mut bw = 0;
    for (p, n) in degrees.iter().zip(control_dims).rev() {
        bw += p * stride;
        stride *= n;
    }
    bw
}

/// Solves `min ||N P - Q||^2 + ||M2 L2 P||^2 + ||M1 L1 P||^2` for `P`.
pub fn solve(
    mats: &DesignMatrices,
    lambda1: &[f64],
    lambda2: &[f64],
    q: &Array2<f64>,
    bandwidth: usize,
    opts: SolveOptions,
) -> Result<Solution> {
    let n = mats.ntot();
    if q.nrows() != mats.n.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} data values for {} collocation rows",
            q.nrows(),
            mats.n.nrows()
        )));
    }
    if lambda1.len() != n || lambda2.len() != n {
        return Err(Error::DimensionMismatch("strength vectors have the wrong length".into()));
    }
    let pens = scaled_penalties(mats, lambda1, lambda2);
    let bw = bandwidth.min(n.saturating_sub(1));
    let solver = match opts.solver {
        SolverKind::Auto if n.saturating_mul(bw + 1) <= AUTO_DIRECT_LIMIT => SolverKind::Direct,
        SolverKind::Auto => SolverKind::Iterative,
        s => s,
    };
    match solver {
        SolverKind::Direct => solve_direct(mats, &pens, q, bw),
        SolverKind::Iterative => solve_cg(mats, &pens, q, opts),
        _ => solve_qr(mats, &pens, q, bw, opts.qr_rcond),
    }
}

fn solve_direct(mats: &DesignMatrices, pens: &[CsrMatrix], q: &Array2<f64>, bw: usize) -> Result<Solution> {
    let n = mats.ntot();
    let mut a = BandedSpd::zeros(n, bw);
    a.add_gram(&mats.n);
    for p in pens {
        a.add_gram(p);
    }
    let chol = a.cholesky()?;
    let mut rhs = mats.n.transpose_mul_dense(q);
    for mut col in rhs.columns_mut() {
        let mut b = col.to_vec();
        chol.solve_in_place(&mut b);
        col.iter_mut().zip(b).for_each(|(dst, v)| *dst = v);
    }
    Ok(Solution {
        control_points: rhs,
        solver: SolverKind::Direct,
        iterations: 0,
        dropped: 0,
    })
}

/// Jacobi-preconditioned CG on the normal equations, applied matrix-free.
fn solve_cg(mats: &DesignMatrices, pens: &[CsrMatrix], q: &Array2<f64>, opts: SolveOptions) -> Result<Solution> {
    let n = mats.ntot();
    let mut diag = mats.n.col_sq_sums();
    for p in pens {
        for (d, v) in diag.iter_mut().zip(p.col_sq_sums()) {
            *d += v;
        }
    }
    if let Some(j) = diag.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::RankDeficient { column: j, pivot: 0.0 });
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let rows = pens.iter().map(CsrMatrix::nrows).fold(mats.n.nrows(), usize::max);
    let mut tmp = vec![0.0; rows];
    let mut apply = |x: &[f64], y: &mut [f64]| {
        y.iter_mut().for_each(|v| *v = 0.0);
        for m in std::iter::once(&mats.n).chain(pens) {
            let t = &mut tmp[..m.nrows()];
            m.matvec(x, t);
            m.matvec_transpose_add(t, y);
        }
    };
    let rhs = mats.n.transpose_mul_dense(q);
    let mut out = Array2::zeros((n, q.ncols()));
    let mut max_iter_used = 0;
    for c in 0..q.ncols() {
        let b = rhs.column(c).to_vec();
        let bnorm = norm(&b);
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            continue;
        }
        let mut r = b.clone();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let mut it = 0;
        let mut rel = 1.0;
        while it < opts.max_iter {
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::RankDeficient { column: 0, pivot: pap });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            it += 1;
            rel = norm(&r) / bnorm;
            if rel <= opts.tol {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if rel > opts.tol {
            return Err(Error::NotConverged {
                iterations: it,
                residual: rel,
            });
        }
        max_iter_used = max_iter_used.max(it);
        out.column_mut(c).iter_mut().zip(x).for_each(|(dst, v)| *dst = v);
    }
    Ok(Solution {
        control_points: out,
        solver: SolverKind::Iterative,
        iterations: max_iter_used,
        dropped: 0,
    })
}

fn solve_qr(
    mats: &DesignMatrices,
    pens: &[CsrMatrix],
    q: &Array2<f64>,
    bw: usize,
    rcond: f64,
) -> Result<Solution> {
    let n = mats.ntot();
    let s = q.ncols();
    let mut qr = BandedQr::new(n, bw, s);
    // (first column, block, row): data rows are block 0
    let mut order: Vec<(usize, usize, usize)> = Vec::new();
    for (b, m) in std::iter::once(&mats.n).chain(pens).enumerate() {
        for i in 0..m.nrows() {
            if let Some(&c) = m.row(i).0.first() {
                order.push((c, b, i));
            }
        }
    }
    order.sort_unstable();
    let zeros = vec![0.0; s];
    let mut qrow = vec![0.0; s];
    for (_, b, i) in order {
        if b == 0 {
            let (idx, val) = mats.n.row(i);
            qrow.iter_mut().zip(q.row(i)).for_each(|(d, v)| *d = *v);
            qr.add_row(idx, val, &qrow);
        } else {
            let (idx, val) = pens[b - 1].row(i);
            qr.add_row(idx, val, &zeros);
        }
    }
    let (x, dropped) = qr.basic_solution(rcond);
    let control_points = Array2::from_shape_vec((n, s), x).expect("solution has n x s entries");
    Ok(Solution {
        control_points,
        solver: SolverKind::Qr,
        iterations: 0,
        dropped,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Frobenius norm of the data residual `N P - Q`.
pub fn residual_norm(n: &CsrMatrix, p: &Array2<f64>, q: &Array2<f64>) -> f64 {
    let np = n.mul_dense(p);
    np.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}
