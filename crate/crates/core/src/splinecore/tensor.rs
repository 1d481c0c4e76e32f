use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::knots::KnotVector;
use super::multi_index::MultiIndexSpace;
use crate::error::{Error, Result};

/// Axis-aligned closed box in physical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "box bounds of lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidInput(format!(
                    "box dimension {k} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit cube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    /// Errors with the first dimension of zero width.
    pub fn require_positive_widths(&self) -> Result<()> {
        match (0..self.dim()).find(|&k| self.width(k) <= 0.0) {
            Some(dim) => Err(Error::DegenerateDomain { dim }),
            None => Ok(()),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn intersection(&self, other: &DomainBox) -> Option<DomainBox> {
        if self.dim() != other.dim() {
            return None;
        }
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        if lower.iter().zip(&upper).any(|(lo, hi)| lo > hi) {
            None
        } else {
            Some(DomainBox { lower, upper })
        }
    }

    /// Grows every side by `margin`.
    pub fn dilate(&self, margin: f64) -> DomainBox {
        DomainBox {
            lower: self.lower.iter().map(|v| v - margin).collect(),
            upper: self.upper.iter().map(|v| v + margin).collect(),
        }
    }

    /// Affine map onto `[0, 1]^d`, clamped so rounding never leaves the unit cube.
    pub fn to_param(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, v)| ((v - self.lower[k]) / self.width(k)).clamp(0.0, 1.0))
            .collect()
    }

    pub fn to_physical(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(k, v)| self.lower[k] + v * self.width(k))
            .collect()
    }
}

/// d-variate tensor-product B-spline with vector-valued control points.
///
/// Control points are stored one per row, rows ordered by the lexicographic index of the
/// basis multi-index. Evaluation is in parameter space `[0, 1]^d`; `domain_box` records the
/// physical box that was mapped onto it.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpline {
    knot_vectors: Vec<KnotVector>,
    space: MultiIndexSpace,
    control_points: Array2<f64>,
    domain_box: DomainBox,
}

impl TensorSpline {
    pub fn new(
        knot_vectors: Vec<KnotVector>,
        control_points: Array2<f64>,
        domain_box: DomainBox,
    ) -> Result<Self> {
        if knot_vectors.is_empty() {
            return Err(Error::InvalidInput("a spline needs at least one knot vector".into()));
        }
        let space = MultiIndexSpace::new(knot_vectors.iter().map(|kv| kv.basis_count()).collect())?;
        if control_points.nrows() != space.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} control points for {} basis functions",
                control_points.nrows(),
                space.len()
            )));
        }
        if control_points.ncols() == 0 {
            return Err(Error::DimensionMismatch("control points have no components".into()));
        }
        if control_points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("control points must be finite".into()));
        }
        if domain_box.dim() != knot_vectors.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}-dimensional domain box for a {}-variate spline",
                domain_box.dim(),
                knot_vectors.len()
            )));
        }
        domain_box.require_positive_widths()?;
        Ok(Self {
            knot_vectors,
            space,
            control_points,
            domain_box,
        })
    }

    pub fn domain_dim(&self) -> usize {
        self.knot_vectors.len()
    }

    pub fn value_dim(&self) -> usize {
        self.control_points.ncols()
    }

    pub fn knot_vectors(&self) -> &[KnotVector] {
        &self.knot_vectors
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.knot_vectors.iter().map(|kv| kv.degree()).collect()
    }

    pub fn space(&self) -> &MultiIndexSpace {
        &self.space
    }

    pub fn control_points(&self) -> &Array2<f64> {
        &self.control_points
    }

    pub fn domain_box(&self) -> &DomainBox {
        &self.domain_box
    }

    /// `C(u) = sum_alpha N_alpha(u) P_alpha`, touching only the `prod (p_k + 1)` active bases.
    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        let active = ActiveBasis::values(&self.knot_vectors, u)?;
        Ok(self.combine(&active))
    }

    /// Evaluates at a physical location inside `domain_box`.
    pub fn eval_physical(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point_dim(x)?;
        self.eval(&self.domain_box.to_param(x))
    }

    /// Mixed partial `d^delta C / du^delta` in parameter space.
    pub fn eval_partial(&self, u: &[f64], delta: &[usize]) -> Result<Vec<f64>> {
        let active = ActiveBasis::derivatives(&self.knot_vectors, u, delta)?;
        Ok(self.combine(&active))
    }

    /// Mixed partial with respect to physical coordinates (chain rule through `domain_box`).
    pub fn eval_partial_physical(&self, x: &[f64], delta: &[usize]) -> Result<Vec<f64>> {
        self.check_point_dim(x)?;
        let mut v = self.eval_partial(&self.domain_box.to_param(x), delta)?;
        let scale: f64 = delta
            .iter()
            .enumerate()
            .map(|(k, &q)| self.domain_box.width(k).powi(q as i32))
            .product();
        v.iter_mut().for_each(|c| *c /= scale);
        Ok(v)
    }

    fn check_point_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.domain_dim() {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} for a {}-variate spline",
                x.len(),
                self.domain_dim()
            )));
        }
        Ok(())
    }

    fn combine(&self, active: &ActiveBasis) -> Vec<f64> {
        let mut out = vec![0.0; self.value_dim()];
        active.for_each(&self.space, |j, w| {
            for (o, c) in out.iter_mut().zip(self.control_points.row(j)) {
                *o += w * c;
            }
        });
        out
    }
}

/// Per-dimension active univariate values (or derivatives) at one parameter tuple.
#[derive(Debug, Clone)]
pub(crate) struct ActiveBasis {
    /// Index of the first active basis function per dimension (`span - p`).
    pub first: Vec<usize>,
    pub vals: Vec<Vec<f64>>,
}

impl ActiveBasis {
    pub fn values(kvs: &[KnotVector], u: &[f64]) -> Result<Self> {
        check_dim(kvs, u.len())?;
        let mut first = Vec::with_capacity(kvs.len());
        let mut vals = Vec::with_capacity(kvs.len());
        for (kv, &uk) in kvs.iter().zip(u) {
            let span = kv.find_span(uk)?;
            let mut v = vec![0.0; kv.degree() + 1];
            kv.basis_into(span, uk, &mut v);
            first.push(span - kv.degree());
            vals.push(v);
        }
        Ok(Self { first, vals })
    }

    pub fn derivatives(kvs: &[KnotVector], u: &[f64], delta: &[usize]) -> Result<Self> {
        check_dim(kvs, u.len())?;
        check_dim(kvs, delta.len())?;
        let mut first = Vec::with_capacity(kvs.len());
        let mut vals = Vec::with_capacity(kvs.len());
        for ((kv, &uk), &q) in kvs.iter().zip(u).zip(delta) {
            let (span, mut table) = kv.basis_derivatives(uk, q)?;
            first.push(span - kv.degree());
            vals.push(table.swap_remove(q));
        }
        Ok(Self { first, vals })
    }

    /// Calls `f(lex_index, weight)` for every active tensor basis function.
    pub fn for_each(&self, space: &MultiIndexSpace, mut f: impl FnMut(usize, f64)) {
        let d = self.vals.len();
        let strides = space.strides();
        let mut offs = vec![0usize; d];
        loop {
            let mut idx = 0;
            let mut w = 1.0;
            for k in 0..d {
                idx += (self.first[k] + offs[k]) * strides[k];
                w *= self.vals[k][offs[k]];
            }
            f(idx, w);
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                offs[k] += 1;
                if offs[k] < self.vals[k].len() {
                    break;
                }
                offs[k] = 0;
            }
        }
    }
}

fn check_dim(kvs: &[KnotVector], len: usize) -> Result<()> {
    if kvs.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "expected {} coordinates, got {len}",
            kvs.len()
        )));
    }
    Ok(())
}
