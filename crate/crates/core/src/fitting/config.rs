use crate::error::{Error, Result};
use crate::splinecore::{AnchorRule, DomainBox, MAX_DEGREE};

/// Linear solver used for the penalized least-squares problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// Direct when the banded normal matrix fits in memory comfortably, otherwise iterative.
    #[default]
    Auto,
    /// Banded Cholesky of the normal matrix.
    Direct,
    /// Jacobi-preconditioned conjugate gradients on the normal equations.
    Iterative,
    /// Banded Givens QR of the stacked matrix with a basic solution on rank deficiency.
    /// Never fails on singular systems; intended for diagnostics and unregularized baselines.
    Qr,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Auto => "auto",
            SolverKind::Direct => "direct",
            SolverKind::Iterative => "cg",
            SolverKind::Qr => "qr",
        }
    }
}

/// Band storage (entries) above which `Auto` switches to the iterative solver.
pub const AUTO_DIRECT_LIMIT: usize = 40_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Polynomial degree per domain dimension.
    pub degrees: Vec<usize>,
    /// Number of control points per domain dimension.
    pub control_dims: Vec<usize>,
    /// Regularization threshold `s*`.
    pub s_star: f64,
    pub use_second_deriv: bool,
    pub use_first_deriv: bool,
    pub solver: SolverKind,
    pub iterative_tol: f64,
    pub iterative_max_iter: usize,
    /// Relative diagonal threshold below which the QR solver drops an unknown.
    pub qr_rcond: f64,
    pub anchor_rule: AnchorRule,
    /// Replaces every second-derivative strength with this constant (uniform smoothing).
    pub uniform_lambda2: Option<f64>,
    /// Also estimate the condition number of the stacked system.
    pub compute_condition: bool,
    /// Fitting domain; defaults to the bounding box of the data.
    pub domain: Option<DomainBox>,
}

impl FitConfig {
    /// Same degree in every dimension, both derivative penalties on, `s* = 1`.
    pub fn new(degree: usize, control_dims: Vec<usize>) -> Self {
        Self {
            degrees: vec![degree; control_dims.len()],
            control_dims,
            s_star: 1.0,
            use_second_deriv: true,
            use_first_deriv: true,
            solver: SolverKind::Auto,
            iterative_tol: 1e-10,
            iterative_max_iter: 20_000,
            qr_rcond: 1e-12,
            anchor_rule: AnchorRule::Argmax,
            uniform_lambda2: None,
            compute_condition: false,
            domain: None,
        }
    }

    pub fn with_s_star(mut self, s_star: f64) -> Self {
        self.s_star = s_star;
        self
    }

    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        self.domain = Some(domain);
        self
    }

    /// Both derivative penalties off: plain least squares.
    pub fn unregularized(mut self) -> Self {
        self.use_first_deriv = false;
        self.use_second_deriv = false;
        self.uniform_lambda2 = None;
        self
    }

    pub fn is_regularized(&self) -> bool {
        self.use_first_deriv || self.use_second_deriv
    }

    pub fn validate(&self, domain_dim: usize) -> Result<()> {
        if self.degrees.len() != domain_dim || self.control_dims.len() != domain_dim {
            return Err(Error::InvalidConfig(format!(
                "{} degrees and {} control dimensions for {domain_dim}-dimensional data",
                self.degrees.len(),
                self.control_dims.len()
            )));
        }
        for (k, (&p, &n)) in self.degrees.iter().zip(&self.control_dims).enumerate() {
            if p == 0 || p > MAX_DEGREE {
                return Err(Error::InvalidConfig(format!(
                    "degree {p} in dimension {k} outside 1..={MAX_DEGREE}"
                )));
            }
            if n < p + 1 {
                return Err(Error::InvalidConfig(format!(
                    "{n} control points in dimension {k} is fewer than degree + 1 = {}",
                    p + 1
                )));
            }
            if self.use_second_deriv && p < 2 {
                return Err(Error::InvalidConfig(format!(
                    "second-derivative regularization needs degree >= 2 (dimension {k} has {p})"
                )));
            }
        }
        if !(self.s_star >= 0.0) || !self.s_star.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "regularization threshold must be finite and >= 0, got {}",
                self.s_star
            )));
        }
        if let Some(l) = self.uniform_lambda2 {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::InvalidConfig(format!("uniform strength {l} must be >= 0")));
            }
            if !self.use_second_deriv {
                return Err(Error::InvalidConfig(
                    "uniform strength requires second-derivative regularization".into(),
                ));
            }
        }
        if !(self.iterative_tol > 0.0) || self.iterative_max_iter == 0 {
            return Err(Error::InvalidConfig("iterative solver settings must be positive".into()));
        }
        if !(self.qr_rcond >= 0.0) {
            return Err(Error::InvalidConfig("QR rank threshold must be >= 0".into()));
        }
        if let Some(bx) = &self.domain {
            if bx.dim() != domain_dim {
                return Err(Error::InvalidConfig("fitting domain has the wrong dimension".into()));
            }
            bx.require_positive_widths()?;
        }
        Ok(())
    }
}
