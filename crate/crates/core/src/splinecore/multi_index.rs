use crate::error::{Error, Result};

/// Box of multi-indices `0 <= alpha^k < n_k`, flattened in lexicographic order
/// (first component most significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSpace {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl MultiIndexSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "multi-index dimensions must be positive, got {dims:?}"
            )));
        }
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len() - 1).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(Self { dims, strides })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    /// Total number of multi-indices.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lex_index(&self, alpha: &[usize]) -> Result<usize> {
        if alpha.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "multi-index of length {} in a {}-dimensional space",
                alpha.len(),
                self.dims.len()
            )));
        }
        let mut idx = 0;
        for (k, (&a, &n)) in alpha.iter().zip(&self.dims).enumerate() {
            if a >= n {
                return Err(Error::IndexOutOfRange {
                    component: k,
                    value: a,
                    bound: n,
                });
            }
            idx += a * self.strides[k];
        }
        Ok(idx)
    }

    pub fn unlex(&self, index: usize) -> Result<Vec<usize>> {
        let len = self.len();
        if index >= len {
            return Err(Error::FlatIndexOutOfRange { index, len });
        }
        let mut rest = index;
        Ok(self
            .strides
            .iter()
            .map(|&s| {
                let a = rest / s;
                rest %= s;
                a
            })
            .collect())
    }
}

/// All multi-indices `delta` of length `dim` with `|delta| = order`, in lexicographic order
/// descending from `(order, 0, ..)`. Each appears once.
pub fn derivative_multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == dim - 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            rec(dim, remaining - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim > 0 {
        rec(dim, order, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}
