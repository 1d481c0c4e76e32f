//! Scattered-data fitting with adaptive per-control-point regularization.

mod assembly;
mod banded;
mod cloud;
mod config;
mod solve;
mod sparse;
mod strength;

pub use assembly::{
    assemble_collocation, assemble_derivative_block, assemble_order_block, DesignMatrices,
};
pub use banded::{banded_qr, row_bandwidth, BandedCholesky, BandedQr, BandedSpd};
pub use cloud::{parameterize, parameterize_in, unparameterize, PointCloud};
pub use config::{FitConfig, SolverKind, AUTO_DIRECT_LIMIT};
pub use solve::{
    residual_norm, scaled_penalties, solve, stacked_matrix, tensor_bandwidth, Solution,
    SolveOptions,
};
pub use sparse::CsrMatrix;
pub use strength::{lambda1, lambda2};

use ndarray::Array2;

use crate::analysis::{condition_number, ConditionEstimate};
use crate::error::Result;
use crate::splinecore::{DomainBox, KnotVector, TensorSpline};

/// Everything a fit assembles before solving.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub knot_vectors: Vec<KnotVector>,
    pub anchors: Vec<Vec<f64>>,
    pub domain_box: DomainBox,
    /// `m x d` parameters in the unit cube.
    pub params: Array2<f64>,
    pub values: Array2<f64>,
    pub mats: DesignMatrices,
}

impl FitProblem {
    pub fn build(cloud: &PointCloud, config: &FitConfig) -> Result<Self> {
        config.validate(cloud.domain_dim())?;
        let (params, domain_box) = match &config.domain {
            Some(bx) => (parameterize_in(cloud.coords().view(), bx)?, bx.clone()),
            None => parameterize(cloud)?,
        };
        let knot_vectors = config
            .degrees
            .iter()
            .zip(&config.control_dims)
            .map(|(&p, &n)| KnotVector::uniform(p, n))
            .collect::<Result<Vec<_>>>()?;
        let anchors: Vec<Vec<f64>> = knot_vectors
            .iter()
            .map(|kv| kv.anchors_with(config.anchor_rule))
            .collect();
        let mats = DesignMatrices::assemble(
            &knot_vectors,
            params.view(),
            &anchors,
            config.use_second_deriv,
            config.use_first_deriv,
        )?;
        Ok(Self {
            knot_vectors,
            anchors,
            domain_box,
            params,
            values: cloud.values().clone(),
            mats,
        })
    }

    /// `(lambda1, lambda2)` for the configured threshold and toggles.
    pub fn strengths(&self, config: &FitConfig) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.mats.ntot();
        let s = &self.mats.col_sums;
        let l2 = match (config.use_second_deriv, config.uniform_lambda2) {
            (false, _) => vec![0.0; n],
            (true, Some(c)) => vec![c; n],
            (true, None) => lambda2(config.s_star, s, &self.mats.col_abs_sums_m2)?,
        };
        let l1 = if config.use_first_deriv {
            lambda1(config.s_star, s, &self.mats.col_abs_sums_m1)?
        } else {
            vec![0.0; n]
        };
        Ok((l1, l2))
    }

    pub fn stacked(&self, lambda1: &[f64], lambda2: &[f64]) -> CsrMatrix {
        stacked_matrix(&self.mats, lambda1, lambda2)
    }

    pub fn bandwidth(&self) -> usize {
        let degrees: Vec<usize> = self.knot_vectors.iter().map(|kv| kv.degree()).collect();
        let dims: Vec<usize> = self.knot_vectors.iter().map(|kv| kv.basis_count()).collect();
        tensor_bandwidth(&degrees, &dims)
    }
}

/// Per-column diagnostics of a fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub s_star: f64,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// `s_j`
    pub col_sums: Vec<f64>,
    /// `stilde_j` of the first-derivative block (zeros when it is off).
    pub col_abs_sums_m1: Vec<f64>,
    /// `stilde_j` of the second-derivative block (zeros when it is off).
    pub col_abs_sums_m2: Vec<f64>,
    /// `||N P - Q||_F`
    pub residual_l2: f64,
    pub stacked_condition: Option<ConditionEstimate>,
    pub solver: SolverKind,
    pub solver_iterations: usize,
    pub dropped_unknowns: usize,
}

impl FitReport {
    /// Columns that receive no data at all.
    pub fn empty_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.col_sums.iter().enumerate().filter(|(_, s)| **s == 0.0).map(|(j, _)| j)
    }
}

/// Fits a tensor-product spline to `cloud`.
pub fn fit(cloud: &PointCloud, config: &FitConfig) -> Result<(TensorSpline, FitReport)> {
    let problem = FitProblem::build(cloud, config)?;
    fit_problem(&problem, config)
}

/// Solves an already assembled problem; lets callers reuse assembly across thresholds.
pub fn fit_problem(problem: &FitProblem, config: &FitConfig) -> Result<(TensorSpline, FitReport)> {
    let (l1, l2) = problem.strengths(config)?;
    let opts = SolveOptions {
        solver: config.solver,
        tol: config.iterative_tol,
        max_iter: config.iterative_max_iter,
        qr_rcond: config.qr_rcond,
    };
    let sol = solve(&problem.mats, &l1, &l2, &problem.values, problem.bandwidth(), opts)?;
    let stacked_condition = if config.compute_condition {
        Some(condition_number(&problem.stacked(&l1, &l2))?)
    } else {
        None
    };
    let residual_l2 = residual_norm(&problem.mats.n, &sol.control_points, &problem.values);
    let model = TensorSpline::new(
        problem.knot_vectors.clone(),
        sol.control_points,
        problem.domain_box.clone(),
    )?;
    let report = FitReport {
        s_star: config.s_star,
        lambda1: l1,
        lambda2: l2,
        col_sums: problem.mats.col_sums.clone(),
        col_abs_sums_m1: problem.mats.col_abs_sums_m1.clone(),
        col_abs_sums_m2: problem.mats.col_abs_sums_m2.clone(),
        residual_l2,
        stacked_condition,
        solver: sol.solver,
        solver_iterations: sol.iterations,
        dropped_unknowns: sol.dropped,
    };
    Ok((model, report))
}
