//! Knot vectors, univariate B-spline bases and tensor-product splines.

mod knots;
mod multi_index;
mod tensor;

pub use knots::{AnchorRule, KnotVector, MAX_DEGREE};
pub use multi_index::{derivative_multi_indices, MultiIndexSpace};
pub use tensor::{DomainBox, TensorSpline};

pub(crate) use tensor::ActiveBasis;
