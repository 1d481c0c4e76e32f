use ndarray::ArrayView2;
use rayon::prelude::*;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::splinecore::{derivative_multi_indices, ActiveBasis, KnotVector, MultiIndexSpace};

/// Collocation matrix, derivative-penalty blocks and their column sums.
#[derive(Debug, Clone)]
pub struct DesignMatrices {
    /// `m x n_tot`, `N[i, j] = N_j(v_i)`.
    pub n: CsrMatrix,
    /// Stacked second-derivative blocks, one per `|delta| = 2`, each `n_tot x n_tot`.
    pub m2: Option<CsrMatrix>,
    /// Stacked first-derivative blocks, one per `|delta| = 1`.
    pub m1: Option<CsrMatrix>,
    /// Column sums `s_j` of `N`.
    pub col_sums: Vec<f64>,
    /// Column sums of `|M2|` (zero when the block is absent).
    pub col_abs_sums_m2: Vec<f64>,
    /// Column sums of `|M1|` (zero when the block is absent).
    pub col_abs_sums_m1: Vec<f64>,
}

impl DesignMatrices {
    pub fn assemble(
        kvs: &[KnotVector],
        params: ArrayView2<f64>,
        anchors: &[Vec<f64>],
        second: bool,
        first: bool,
    ) -> Result<Self> {
        let n = assemble_collocation(kvs, params)?;
        let ntot = n.ncols();
        let m2 = second.then(|| assemble_order_block(kvs, anchors, 2)).transpose()?;
        let m1 = first.then(|| assemble_order_block(kvs, anchors, 1)).transpose()?;
        let abs = |m: &Option<CsrMatrix>| m.as_ref().map_or_else(|| vec![0.0; ntot], |m| m.col_abs_sums());
        Ok(Self {
            col_sums: n.col_sums(),
            col_abs_sums_m2: abs(&m2),
            col_abs_sums_m1: abs(&m1),
            n,
            m2,
            m1,
        })
    }

    pub fn ntot(&self) -> usize {
        self.n.ncols()
    }
}

fn space_of(kvs: &[KnotVector]) -> Result<MultiIndexSpace> {
    MultiIndexSpace::new(kvs.iter().map(|kv| kv.basis_count()).collect())
}

/// Row `i` holds the tensor basis values at parameter `params[i]`, in lexicographic column order.
pub fn assemble_collocation(kvs: &[KnotVector], params: ArrayView2<f64>) -> Result<CsrMatrix> {
    let space = space_of(kvs)?;
    if params.ncols() != kvs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}-dimensional parameters for {} knot vectors",
            params.ncols(),
            kvs.len()
        )));
    }
    let rows: Result<Vec<Vec<(usize, f64)>>> = (0..params.nrows())
        .into_par_iter()
        .map(|i| {
            let u = params.row(i).to_vec();
            let active = ActiveBasis::values(kvs, &u)?;
            let mut row = Vec::new();
            active.for_each(&space, |j, w| row.push((j, w)));
            Ok(row)
        })
        .collect();
    Ok(CsrMatrix::from_rows(space.len(), rows?))
}

/// `(M_delta)[lidx(alpha), lidx(beta)] = d^delta N_beta(w_alpha)` where `w_alpha` is the tensor
/// anchor built from the per-dimension anchors.
pub fn assemble_derivative_block(
    kvs: &[KnotVector],
    anchors: &[Vec<f64>],
    delta: &[usize],
) -> Result<CsrMatrix> {
    let space = space_of(kvs)?;
    if anchors.len() != kvs.len() || delta.len() != kvs.len() {
        return Err(Error::DimensionMismatch(
            "anchors, derivative order and knot vectors disagree in dimension".into(),
        ));
    }
    for (kv, &q) in kvs.iter().zip(delta) {
        if q > kv.degree() {
            return Err(Error::InvalidOrder {
                order: q,
                degree: kv.degree(),
            });
        }
    }
    // Per dimension and anchor: first active basis index and the delta_k-th derivative row.
    let mut tables: Vec<Vec<(usize, Vec<f64>)>> = Vec::with_capacity(kvs.len());
    for ((kv, w), &q) in kvs.iter().zip(anchors).zip(delta) {
        if w.len() != kv.basis_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} anchors for {} basis functions",
                w.len(),
                kv.basis_count()
            )));
        }
        let mut t = Vec::with_capacity(w.len());
        for &a in w {
            let (span, mut ders) = kv.basis_derivatives(a, q)?;
            t.push((span - kv.degree(), ders.swap_remove(q)));
        }
        tables.push(t);
    }
    let rows: Vec<Vec<(usize, f64)>> = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let alpha = space.unlex(i).expect("row index in range");
            let active = ActiveBasis {
                first: alpha.iter().enumerate().map(|(k, &a)| tables[k][a].0).collect(),
                vals: alpha.iter().enumerate().map(|(k, &a)| tables[k][a].1.clone()).collect(),
            };
            let mut row = Vec::new();
            active.for_each(&space, |j, v| row.push((j, v)));
            row
        })
        .collect();
    Ok(CsrMatrix::from_rows(space.len(), rows))
}

/// All `M_delta` with `|delta| = order`, stacked in the order of
/// [`derivative_multi_indices`].
pub fn assemble_order_block(kvs: &[KnotVector], anchors: &[Vec<f64>], order: usize) -> Result<CsrMatrix> {
    let blocks = derivative_multi_indices(kvs.len(), order)
        .iter()
        .map(|delta| assemble_derivative_block(kvs, anchors, delta))
        .collect::<Result<Vec<_>>>()?;
    Ok(CsrMatrix::vstack(&blocks.iter().collect::<Vec<_>>()))
}
