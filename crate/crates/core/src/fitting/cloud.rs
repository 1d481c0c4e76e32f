use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::splinecore::DomainBox;

/// Scattered samples: `m` domain locations in `R^d`, each carrying a value in `R^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Array2<f64>,
    values: Array2<f64>,
}

impl PointCloud {
    pub fn new(coords: Array2<f64>, values: Array2<f64>) -> Result<Self> {
        if coords.nrows() == 0 {
            return Err(Error::InvalidInput("point cloud is empty".into()));
        }
        if coords.nrows() != values.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinate rows but {} value rows",
                coords.nrows(),
                values.nrows()
            )));
        }
        if coords.ncols() == 0 || values.ncols() == 0 {
            return Err(Error::DimensionMismatch(
                "points need at least one coordinate and one value".into(),
            ));
        }
        if let Some(i) = coords
            .rows()
            .into_iter()
            .zip(values.rows())
            .position(|(c, v)| c.iter().chain(v.iter()).any(|x| !x.is_finite()))
        {
            return Err(Error::InvalidInput(format!("point {i} has a non-finite entry")));
        }
        Ok(Self { coords, values })
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }

    pub fn domain_dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn value_dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn coords(&self) -> &Array2<f64> {
        &self.coords
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Tight axis-aligned bounding box (may have zero width).
    pub fn bounding_box(&self) -> DomainBox {
        let d = self.domain_dim();
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for row in self.coords.rows() {
            for k in 0..d {
                lower[k] = lower[k].min(row[k]);
                upper[k] = upper[k].max(row[k]);
            }
        }
        DomainBox::new(lower, upper).expect("finite coordinates give a valid box")
    }

    /// Range `(min, max)` of value component `c`.
    pub fn value_range(&self, c: usize) -> (f64, f64) {
        self.values
            .column(c)
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Maps every point affinely onto `[0, 1]^d` using the cloud's bounding box.
pub fn parameterize(cloud: &PointCloud) -> Result<(Array2<f64>, DomainBox)> {
    let bx = cloud.bounding_box();
    bx.require_positive_widths()?;
    Ok((parameterize_in(cloud.coords().view(), &bx)?, bx))
}

/// Maps points onto `[0, 1]^d` using a caller-supplied box, which must contain them all.
pub fn parameterize_in(coords: ArrayView2<f64>, bx: &DomainBox) -> Result<Array2<f64>> {
    if coords.ncols() != bx.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-dimensional points in a {}-dimensional box",
            coords.ncols(),
            bx.dim()
        )));
    }
    bx.require_positive_widths()?;
    let mut out = Array2::zeros(coords.raw_dim());
    for (i, row) in coords.rows().into_iter().enumerate() {
        let x = row.to_vec();
        if !bx.contains(&x) {
            return Err(Error::InvalidInput(format!(
                "point {i} at {x:?} lies outside the fitting domain"
            )));
        }
        for (k, u) in bx.to_param(&x).into_iter().enumerate() {
            out[[i, k]] = u;
        }
    }
    Ok(out)
}

pub fn unparameterize(params: ArrayView2<f64>, bx: &DomainBox) -> Array2<f64> {
    let mut out = Array2::zeros(params.raw_dim());
    for (i, row) in params.rows().into_iter().enumerate() {
        for (k, x) in bx.to_physical(&row.to_vec()).into_iter().enumerate() {
            out[[i, k]] = x;
        }
    }
    out
}
