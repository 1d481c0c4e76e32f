#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splinereg::fitting::{CsrMatrix, FitConfig, PointCloud};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random small fitting instance. With `hole`, points inside a ball around a random
/// interior center are rejected so some control points receive no data.
pub struct Instance {
    pub cloud: PointCloud,
    pub config: FitConfig,
}

pub fn random_instance(seed: u64, max_unknowns: usize, hole: bool) -> Instance {
    let mut r = rng(seed);
    let d = r.random_range(1..=3usize);
    let (lo, hi) = match d {
        1 => (6, 40),
        2 => (5, 14),
        _ => (4, 7),
    };
    let mut dims: Vec<usize>;
    loop {
        dims = (0..d).map(|_| r.random_range(lo..=hi)).collect();
        if dims.iter().product::<usize>() <= max_unknowns {
            break;
        }
    }
    let degrees: Vec<usize> = dims.iter().map(|&n| r.random_range(2..=3usize.min(n - 1))).collect();
    let ntot: usize = dims.iter().product();
    let m = ntot * r.random_range(4..10);
    let s = r.random_range(1..=2usize);
    let offset: Vec<f64> = (0..d).map(|_| r.random_range(-5.0..5.0)).collect();
    let scale: Vec<f64> = (0..d).map(|_| r.random_range(0.5..20.0)).collect();
    let center: Vec<f64> = (0..d).map(|_| r.random_range(0.3..0.7)).collect();
    let radius = if hole { r.random_range(0.15..0.3) } else { 0.0 };
    let mut coords = Array2::zeros((m, d));
    let mut values = Array2::zeros((m, s));
    let mut i = 0;
    while i < m {
        let u: Vec<f64> = (0..d).map(|_| r.random::<f64>()).collect();
        let dist2: f64 = u.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist2 < radius * radius {
            continue;
        }
        for k in 0..d {
            coords[[i, k]] = offset[k] + scale[k] * u[k];
        }
        for c in 0..s {
            values[[i, c]] = (3.0 * u[0] + c as f64).sin() + (2.0 * u[d - 1]).cos() * (c as f64 + 1.0);
        }
        i += 1;
    }
    let mut config = FitConfig::new(2, dims);
    config.degrees = degrees;
    config.s_star = r.random_range(0.2..20.0);
    Instance {
        cloud: PointCloud::new(coords, values).unwrap(),
        config,
    }
}

/// Minimum-norm least-squares solution of `A X = B` via a dense SVD.
pub fn dense_lstsq(a: &CsrMatrix, b: &Array2<f64>) -> Array2<f64> {
    let dense = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a.get(i, j));
    let svd = dense.svd(true, true);
    let mut out = Array2::zeros((a.ncols(), b.ncols()));
    for c in 0..b.ncols() {
        let rhs = DVector::from_iterator(b.nrows(), b.column(c).iter().cloned());
        let x = svd.solve(&rhs, 1e-13).unwrap();
        for j in 0..a.ncols() {
            out[[j, c]] = x[j];
        }
    }
    out
}

/// Right-hand side of the stacked system: data rows followed by zeros.
pub fn stacked_rhs(values: &Array2<f64>, total_rows: usize) -> Array2<f64> {
    let mut b = Array2::zeros((total_rows, values.ncols()));
    b.slice_mut(ndarray::s![..values.nrows(), ..]).assign(values);
    b
}

pub fn rel_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let num: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}
