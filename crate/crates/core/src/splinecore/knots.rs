use crate::error::{Error, Result};

/// How the parameter at which a basis function is "anchored" is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnchorRule {
    /// Exact maximizer of the basis function, found by ternary search over its support.
    #[default]
    Argmax,
    /// Greville abscissa (mean of the `p` interior knots of the support). Cheaper; coincides
    /// with the maximizer only for symmetric supports.
    Greville,
}

/// Clamped, nondecreasing knot sequence on `[0, 1]` for a univariate B-spline basis of degree `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::InvalidKnots(format!(
                "degree must lie in 1..={MAX_DEGREE}, got {degree}"
            )));
        }
        let p = degree;
        if knots.len() < 2 * p + 2 {
            return Err(Error::InvalidKnots(format!(
                "{} knots cannot hold {} basis functions of degree {p}",
                knots.len(),
                p + 1
            )));
        }
        if knots.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidKnots("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidKnots("knots must be nondecreasing".into()));
        }
        let n = knots.len() - p - 1;
        if knots[..=p].iter().any(|&t| t != 0.0) || knots[n..].iter().any(|&t| t != 1.0) {
            return Err(Error::InvalidKnots(format!(
                "knot vector must be clamped with {} copies of 0 and of 1",
                p + 1
            )));
        }
        if knots[p + 1] == 0.0 || knots[n - 1] == 1.0 {
            return Err(Error::InvalidKnots(
                "end knots may not have multiplicity above degree + 1".into(),
            ));
        }
        let mut run = 1;
        for i in p + 2..n {
            if knots[i] == knots[i - 1] {
                run += 1;
                if run > p {
                    return Err(Error::InvalidKnots(format!(
                        "interior knot {} has multiplicity above degree {p}",
                        knots[i]
                    )));
                }
            } else {
                run = 1;
            }
        }
        Ok(Self { degree, knots })
    }

    /// Clamped knot vector with uniformly spaced interior knots and `basis_count` basis functions.
    pub fn uniform(degree: usize, basis_count: usize) -> Result<Self> {
        if basis_count < degree + 1 {
            return Err(Error::InvalidKnots(format!(
                "{basis_count} basis functions is fewer than degree + 1 = {}",
                degree + 1
            )));
        }
        let spans = basis_count - degree;
        let mut knots = Vec::with_capacity(basis_count + degree + 1);
        knots.extend(std::iter::repeat_n(0.0, degree + 1));
        knots.extend((1..spans).map(|i| i as f64 / spans as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn basis_count(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Index `j` of the knot span with `t_j <= u < t_{j+1}`; `u = 1` maps to the last nonempty span.
    pub fn find_span(&self, u: f64) -> Result<usize> {
        check_unit(u)?;
        let p = self.degree;
        let n = self.basis_count();
        if u >= self.knots[n] {
            return Ok(n - 1);
        }
        // First index in [p+1, n] whose knot exceeds u, minus one.
        let upper = self.knots[p + 1..=n].partition_point(|&t| t <= u) + p + 1;
        Ok(upper - 1)
    }

    /// Span and the `p + 1` basis values `N_{span-p}(u) ..= N_span(u)`.
    pub fn basis_nonzero(&self, u: f64) -> Result<(usize, Vec<f64>)> {
        let span = self.find_span(u)?;
        let mut out = vec![0.0; self.degree + 1];
        self.basis_into(span, u, &mut out);
        Ok((span, out))
    }

    /// Cox-de Boor triangle for the active functions of `span`. `out.len()` must be `p + 1`.
    pub(crate) fn basis_into(&self, span: usize, u: f64, out: &mut [f64]) {
        let p = self.degree;
        let t = &self.knots;
        let mut left = [0.0f64; MAX_DEGREE + 1];
        let mut right = [0.0f64; MAX_DEGREE + 1];
        out[0] = 1.0;
        for j in 1..=p {
            left[j] = u - t[span + 1 - j];
            right[j] = t[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
    }

    /// Span and a `(r + 1) x (p + 1)` table whose row `q` holds the `q`-th derivatives of the
    /// active basis functions at `u`.
    pub fn basis_derivatives(&self, u: f64, order: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        if order > self.degree {
            return Err(Error::InvalidOrder {
                order,
                degree: self.degree,
            });
        }
        let span = self.find_span(u)?;
        Ok((span, self.derivatives_at_span(span, u, order)))
    }

    pub(crate) fn derivatives_at_span(&self, span: usize, u: f64, order: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let t = &self.knots;
        // ndu holds basis values in its upper triangle and knot differences in its lower one.
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - t[span + 1 - j];
            right[j] = t[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![0.0; p + 1]; order + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=order {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for (k, row) in ders.iter_mut().enumerate().skip(1) {
            for v in row.iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }
        ders
    }

    /// Value of the single basis function `N_j` at `u` (zero outside its support).
    pub fn basis_value(&self, j: usize, u: f64) -> Result<f64> {
        let (span, vals) = self.basis_nonzero(u)?;
        let p = self.degree;
        if j + p < span || j > span {
            Ok(0.0)
        } else {
            Ok(vals[j + p - span])
        }
    }

    /// Greville abscissae, one per basis function.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.basis_count())
            .map(|j| self.knots[j + 1..=j + p].iter().sum::<f64>() / p as f64)
            .collect()
    }

    /// Anchor parameters: where each basis function attains its maximum.
    pub fn anchors(&self) -> Vec<f64> {
        self.anchors_with(AnchorRule::Argmax)
    }

    pub fn anchors_with(&self, rule: AnchorRule) -> Vec<f64> {
        let n = self.basis_count();
        let mut out = match rule {
            AnchorRule::Greville => self.greville(),
            AnchorRule::Argmax => (0..n).map(|j| self.argmax_basis(j)).collect(),
        };
        out[0] = 0.0;
        out[n - 1] = 1.0;
        for j in 1..n {
            if out[j] < out[j - 1] {
                out[j] = out[j - 1];
            }
        }
        out
    }

    /// Maximizer of `N_j`, located by bisection on the sign of `N_j'` over the support.
    /// B-spline bases are unimodal when no interior knot exceeds multiplicity `p`, so the
    /// derivative changes sign exactly once (possibly across a kink at a knot).
    fn argmax_basis(&self, j: usize) -> f64 {
        let n = self.basis_count();
        if j == 0 {
            return 0.0;
        }
        if j == n - 1 {
            return 1.0;
        }
        let p = self.degree;
        let slope = |u: f64| {
            let span = self.find_span(u).expect("search stays inside [0, 1]");
            if j + p < span || j > span {
                return 0.0;
            }
            self.derivatives_at_span(span, u, 1)[1][j + p - span]
        };
        let (mut lo, mut hi) = (self.knots[j], self.knots[j + p + 1]);
        while hi - lo > ARGMAX_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let d = slope(mid);
            if d > 0.0 {
                lo = mid;
            } else if d < 0.0 {
                hi = mid;
            } else {
                return mid;
            }
        }
        0.5 * (lo + hi)
    }
}

const ARGMAX_TOL: f64 = 1e-14;

/// Largest supported degree; keeps basis scratch space on the stack.
pub const MAX_DEGREE: usize = 16;

pub(crate) fn check_unit(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { value: u })
    }
}
