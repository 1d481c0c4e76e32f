//! Error metrics, condition numbers of the stacked system and regularization-strength fields.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{banded_qr, CsrMatrix, FitReport};
use crate::splinecore::{ActiveBasis, DomainBox, MultiIndexSpace, TensorSpline};

/// `sigma_min / sigma_max` below which a matrix is reported as singular.
pub const SINGULAR_RATIO: f64 = 1e-13;
/// Largest column count handled by a dense SVD.
pub const DENSE_SVD_LIMIT: usize = 2000;
/// Largest banded triangular factor (stored entries) the estimator will allocate.
pub const BAND_ENTRY_LIMIT: usize = 150_000_000;

/// Pointwise error statistics over a set of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    /// Root mean squared error.
    pub l2: f64,
    /// Maximum absolute error.
    pub linf: f64,
    pub count: usize,
    pub region: Option<DomainBox>,
}

impl ErrorSummary {
    fn from_errors(errors: impl Iterator<Item = f64>, region: Option<&DomainBox>) -> Result<Self> {
        let (mut sq, mut max, mut count) = (0.0, 0.0f64, 0usize);
        for e in errors {
            let e = e.abs();
            sq += e * e;
            max = max.max(e);
            count += 1;
        }
        if count == 0 {
            return Err(Error::EmptyRegion);
        }
        Ok(Self {
            l2: (sq / count as f64).sqrt(),
            linf: max,
            count,
            region: region.cloned(),
        })
    }
}

/// Model values on a regular lattice, points in row-major lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub resolution: Vec<usize>,
    /// Physical coordinates, one row per lattice point.
    pub coords: Array2<f64>,
    pub values: Array2<f64>,
}

/// Lattice parameters `u_k = i_k / (r_k - 1)` in row-major order.
pub fn lattice_params(resolution: &[usize]) -> Result<Vec<Vec<f64>>> {
    if let Some(&r) = resolution.iter().find(|&&r| r < 2) {
        return Err(Error::InvalidInput(format!("grid resolution {r} is below 2")));
    }
    let space = MultiIndexSpace::new(resolution.to_vec())?;
    Ok((0..space.len())
        .map(|i| {
            let idx = space.unlex(i).expect("index in range");
            idx.iter()
                .zip(resolution)
                .map(|(&a, &r)| if a + 1 == r { 1.0 } else { a as f64 / (r - 1) as f64 })
                .collect()
        })
        .collect())
}

fn check_resolution(model: &TensorSpline, resolution: &[usize]) -> Result<()> {
    if resolution.len() != model.domain_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} grid resolutions for a {}-dimensional model",
            resolution.len(),
            model.domain_dim()
        )));
    }
    Ok(())
}

fn to_array(rows: Vec<Vec<f64>>, ncols: usize) -> Array2<f64> {
    let nrows = rows.len();
    Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect())
        .expect("rows have equal length")
}

pub fn grid_sample(model: &TensorSpline, resolution: &[usize]) -> Result<Grid> {
    check_resolution(model, resolution)?;
    let params = lattice_params(resolution)?;
    let values = params
        .par_iter()
        .map(|u| model.eval(u))
        .collect::<Result<Vec<_>>>()?;
    let bx = model.domain_box();
    let coords = params.iter().map(|u| bx.to_physical(u)).collect();
    Ok(Grid {
        resolution: resolution.to_vec(),
        coords: to_array(coords, model.domain_dim()),
        values: to_array(values, model.value_dim()),
    })
}

fn require_scalar(model: &TensorSpline) -> Result<()> {
    if model.value_dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "error metrics need a scalar model, got {} components",
            model.value_dim()
        )));
    }
    Ok(())
}

/// Errors of a scalar model against `f` on the lattice, restricted to the closed `region`.
pub fn error_vs_function<F>(
    model: &TensorSpline,
    f: F,
    resolution: &[usize],
    region: Option<&DomainBox>,
) -> Result<ErrorSummary>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    require_scalar(model)?;
    check_resolution(model, resolution)?;
    if let Some(r) = region {
        if r.dim() != model.domain_dim() {
            return Err(Error::DimensionMismatch("region has the wrong dimension".into()));
        }
    }
    let grid = grid_sample(model, resolution)?;
    let errors: Vec<f64> = grid
        .coords
        .rows()
        .into_iter()
        .zip(grid.values.column(0))
        .filter_map(|(x, &v)| {
            let x = x.to_vec();
            region.is_none_or(|r| r.contains(&x)).then(|| v - f(&x))
        })
        .collect();
    ErrorSummary::from_errors(errors.into_iter(), region)
}

/// Errors of a scalar model against reference samples. Samples outside the model's domain
/// box or outside `region` are ignored.
pub fn error_vs_points(
    model: &TensorSpline,
    coords: ArrayView2<f64>,
    values: ArrayView2<f64>,
    region: Option<&DomainBox>,
) -> Result<ErrorSummary> {
    require_scalar(model)?;
    if coords.ncols() != model.domain_dim() || values.ncols() != 1 || coords.nrows() != values.nrows() {
        return Err(Error::DimensionMismatch("reference samples do not match the model".into()));
    }
    let bx = model.domain_box();
    let mut errors = Vec::new();
    for (x, v) in coords.rows().into_iter().zip(values.column(0)) {
        let x = x.to_vec();
        if bx.contains(&x) && region.is_none_or(|r| r.contains(&x)) {
            errors.push(model.eval_physical(&x)?[0] - v);
        }
    }
    ErrorSummary::from_errors(errors.into_iter(), region)
}

/// Extremal singular values of a matrix and the resulting condition number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionEstimate {
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// `sigma_min < SINGULAR_RATIO * sigma_max`.
    pub singular: bool,
}

impl ConditionEstimate {
    fn new(sigma_max: f64, sigma_min: f64) -> Self {
        Self {
            sigma_max,
            sigma_min,
            singular: !(sigma_min >= SINGULAR_RATIO * sigma_max),
        }
    }

    /// `sigma_max / sigma_min`, or infinity when flagged singular.
    pub fn value(&self) -> f64 {
        if self.singular {
            f64::INFINITY
        } else {
            self.sigma_max / self.sigma_min
        }
    }
}

/// Condition number of a (typically tall) sparse matrix.
///
/// The matrix is first reduced to its banded triangular factor `R`, which has the same
/// singular values. Up to [`DENSE_SVD_LIMIT`] columns `R` is decomposed densely; beyond that
/// power and inverse iteration on `R^T R` estimate the extremes.
pub fn condition_number(a: &CsrMatrix) -> Result<ConditionEstimate> {
    let n = a.ncols();
    if n == 0 || a.nnz() == 0 {
        return Err(Error::InvalidInput("condition number of an empty or zero matrix".into()));
    }
    let bw = crate::fitting::row_bandwidth(a);
    if n.saturating_mul(bw + 1) > BAND_ENTRY_LIMIT {
        return Err(Error::Capability(format!(
            "triangular factor with {n} columns and bandwidth {bw} exceeds {BAND_ENTRY_LIMIT} entries"
        )));
    }
    let qr = banded_qr(a, None, 0);
    if n <= DENSE_SVD_LIMIT {
        let r = DMatrix::from_fn(n, n, |i, j| qr.r_entry(i, j));
        let sv = r.singular_values();
        let max = sv.iter().cloned().fold(0.0f64, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        return Ok(ConditionEstimate::new(max, min));
    }
    let sigma_max = power_sigma_max(&qr, n);
    let min_diag = qr.diag().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    // sigma_min of a triangular matrix never exceeds its smallest diagonal magnitude.
    if !(min_diag >= SINGULAR_RATIO * sigma_max) {
        return Ok(ConditionEstimate::new(sigma_max, min_diag));
    }
    let sigma_min = inverse_sigma_min(&qr, n);
    Ok(ConditionEstimate::new(sigma_max, sigma_min))
}

const ITER_TOL: f64 = 1e-7;
const ITER_MAX: usize = 5000;

fn start_vector(n: usize) -> Vec<f64> {
    // deterministic, not aligned with any coordinate direction
    let v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    normalized(v)
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    v
}

fn power_sigma_max(qr: &crate::fitting::BandedQr, n: usize) -> f64 {
    let mut v = start_vector(n);
    let mut est = 0.0;
    for _ in 0..ITER_MAX {
        let w = qr.rt_mul(&qr.r_mul(&v));
        let lam: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        v = normalized(w);
        if (lam - est).abs() <= ITER_TOL * lam {
            est = lam;
            break;
        }
        est = lam;
    }
    est.sqrt()
}

fn inverse_sigma_min(qr: &crate::fitting::BandedQr, n: usize) -> f64 {
    let mut v = start_vector(n);
    let mut est = 0.0;
    for _ in 0..ITER_MAX {
        let mut w = v.clone();
        qr.normal_solve_in_place(&mut w);
        let mu: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        v = normalized(w);
        if (mu - est).abs() <= ITER_TOL * mu {
            est = mu;
            break;
        }
        est = mu;
    }
    (1.0 / est).sqrt()
}

/// Regularization strength `sum_j lambda_j N_j(u)` sampled on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthField {
    pub order: usize,
    pub grid: Grid,
}

pub fn strength_field(
    model: &TensorSpline,
    report: &FitReport,
    order: usize,
    resolution: &[usize],
) -> Result<StrengthField> {
    let lambda = match order {
        1 => &report.lambda1,
        2 => &report.lambda2,
        _ => return Err(Error::InvalidInput(format!("strength order must be 1 or 2, got {order}"))),
    };
    if lambda.len() != model.space().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} strengths for {} control points",
            lambda.len(),
            model.space().len()
        )));
    }
    check_resolution(model, resolution)?;
    let params = lattice_params(resolution)?;
    let kvs = model.knot_vectors();
    let space = model.space();
    let values = params
        .par_iter()
        .map(|u| {
            let active = ActiveBasis::values(kvs, u)?;
            let mut acc = 0.0;
            active.for_each(space, |j, w| acc += lambda[j] * w);
            Ok(vec![acc])
        })
        .collect::<Result<Vec<_>>>()?;
    let bx = model.domain_box();
    let coords = params.iter().map(|u| bx.to_physical(u)).collect();
    Ok(StrengthField {
        order,
        grid: Grid {
            resolution: resolution.to_vec(),
            coords: to_array(coords, model.domain_dim()),
            values: to_array(values, 1),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splinecore::KnotVector;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_model(c: f64) -> TensorSpline {
        let kvs = vec![KnotVector::uniform(2, 5).unwrap(), KnotVector::uniform(3, 6).unwrap()];
        let bx = DomainBox::new(vec![-1.0, 0.0], vec![1.0, 4.0]).unwrap();
        TensorSpline::new(kvs, Array2::from_elem((30, 1), c), bx).unwrap()
    }

    #[test]
    fn lattice_corners() {
        let m = constant_model(2.0);
        let g = grid_sample(&m, &[2, 2]).unwrap();
        assert_eq!(g.coords, array![[-1.0, 0.0], [-1.0, 4.0], [1.0, 0.0], [1.0, 4.0]]);
        assert!(g.values.iter().all(|v| (v - 2.0).abs() < 1e-14));
        assert!(grid_sample(&m, &[1, 4]).is_err());
    }

    #[test]
    fn grid_matches_pointwise_eval() {
        let kvs = vec![KnotVector::uniform(3, 7).unwrap(), KnotVector::uniform(2, 5).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cp = Array2::from_shape_fn((35, 2), |_| rng.random_range(-1.0..1.0));
        let m = TensorSpline::new(kvs, cp, DomainBox::unit(2)).unwrap();
        let g = grid_sample(&m, &[9, 5]).unwrap();
        for (i, u) in lattice_params(&[9, 5]).unwrap().iter().enumerate() {
            assert_eq!(g.values.row(i).to_vec(), m.eval(u).unwrap());
        }
    }

    #[test]
    fn offset_errors() {
        let m = constant_model(1.5);
        let s = error_vs_function(&m, |_| 1.0, &[11, 11], None).unwrap();
        assert!((s.linf - 0.5).abs() < 1e-14 && (s.l2 - 0.5).abs() < 1e-14);
        assert_eq!(s.count, 121);
        let exact = error_vs_function(&m, |_| 1.5, &[11, 11], None).unwrap();
        assert!(exact.linf < 1e-14);
        let far = DomainBox::new(vec![5.0, 5.0], vec![6.0, 6.0]).unwrap();
        assert!(matches!(
            error_vs_function(&m, |_| 1.0, &[11, 11], Some(&far)),
            Err(Error::EmptyRegion)
        ));
        // closed box: the lattice line x = 0 lies on the boundary and counts
        let edge = DomainBox::new(vec![0.0, 0.0], vec![1.0, 4.0]).unwrap();
        assert_eq!(error_vs_function(&m, |_| 1.0, &[11, 11], Some(&edge)).unwrap().count, 66);
    }

    #[test]
    fn condition_examples() {
        let eye = CsrMatrix::from_rows(3, (0..3).map(|i| vec![(i, 1.0)]).collect());
        assert!((condition_number(&eye).unwrap().value() - 1.0).abs() < 1e-12);
        let d = CsrMatrix::from_rows(2, vec![vec![(0, 2.0)], vec![(1, 1.0)]]);
        assert!((condition_number(&d).unwrap().value() - 2.0).abs() < 1e-12);
        let sing = CsrMatrix::from_rows(2, vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)]]);
        assert!(condition_number(&sing).unwrap().singular);
    }

    #[test]
    fn condition_matches_dense_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let rows: Vec<Vec<(usize, f64)>> = (0..50)
            .map(|_| (0..20).map(|j| (j, rng.random_range(-1.0..1.0))).collect())
            .collect();
        let a = CsrMatrix::from_rows(20, rows);
        let sv = DMatrix::from_fn(50, 20, |i, j| a.get(i, j)).singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let est = condition_number(&a).unwrap().value();
        assert!((est - max / min).abs() <= 1e-6 * max / min);
    }

    #[test]
    fn iterative_estimates_agree_with_dense() {
        // banded, well conditioned, wide enough to take the iterative path
        let n = DENSE_SVD_LIMIT + 100;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0 + (i % 7) as f64 / 7.0)];
                if i + 1 < n {
                    r.push((i + 1, 0.5));
                }
                r
            })
            .collect();
        let a = CsrMatrix::from_rows(n, rows);
        let est = condition_number(&a).unwrap();
        let sv = DMatrix::from_fn(n, n, |i, j| a.get(i, j)).singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((est.sigma_max - max).abs() <= 1e-3 * max);
        assert!((est.sigma_min - min).abs() <= 1e-3 * min);
    }
}
