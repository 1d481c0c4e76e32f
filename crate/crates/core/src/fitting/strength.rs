use crate::error::{Error, Result};

/// Second-derivative strengths: `lambda_j = max(s* - s_j, 0) / stilde_j`.
///
/// Lifts every column sum of the stacked matrix to at least `s_star`.
pub fn lambda2(s_star: f64, col_sums: &[f64], abs_sums: &[f64]) -> Result<Vec<f64>> {
    check_lengths(col_sums, abs_sums)?;
    col_sums
        .iter()
        .zip(abs_sums)
        .enumerate()
        .map(|(j, (&s, &st))| {
            let deficit = (s_star - s).max(0.0);
            if deficit == 0.0 {
                Ok(0.0)
            } else if st > 0.0 {
                Ok(deficit / st)
            } else {
                Err(Error::Unregularizable {
                    column: j,
                    order: 2,
                    col_sum: s,
                })
            }
        })
        .collect()
}

/// First-derivative strengths: `s* / stilde_j` for columns without data, zero elsewhere.
pub fn lambda1(s_star: f64, col_sums: &[f64], abs_sums: &[f64]) -> Result<Vec<f64>> {
    check_lengths(col_sums, abs_sums)?;
    col_sums
        .iter()
        .zip(abs_sums)
        .enumerate()
        .map(|(j, (&s, &st))| {
            if s > 0.0 || s_star == 0.0 {
                Ok(0.0)
            } else if st > 0.0 {
                Ok(s_star / st)
            } else {
                Err(Error::Unregularizable {
                    column: j,
                    order: 1,
                    col_sum: s,
                })
            }
        })
        .collect()
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} column sums but {} derivative column sums",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_examples() {
        assert_eq!(lambda2(6.0, &[2.0], &[4.0]).unwrap(), vec![1.0]);
        assert_eq!(lambda2(6.0, &[7.0, 6.0], &[4.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(lambda2(0.0, &[0.0, 1.0], &[0.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            lambda2(1.0, &[5.0, 0.5], &[1.0, 0.0]),
            Err(Error::Unregularizable { column: 1, order: 2, .. })
        ));
    }

    #[test]
    fn first_order_examples() {
        assert_eq!(lambda1(5.0, &[0.001], &[7.0]).unwrap(), vec![0.0]);
        assert_eq!(lambda1(5.0, &[0.0], &[2.0]).unwrap(), vec![2.5]);
        assert_eq!(lambda1(0.0, &[0.0, 0.0], &[2.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            lambda1(1.0, &[0.0], &[0.0]),
            Err(Error::Unregularizable { column: 0, order: 1, .. })
        ));
    }

    #[test]
    fn stacked_column_sum_reaches_threshold() {
        let s = [0.0, 0.3, 2.0, 5.0];
        let st = [0.7, 1.9, 0.2, 3.0];
        let l = lambda2(2.5, &s, &st).unwrap();
        for j in 0..4 {
            let lifted = s[j] + l[j] * st[j];
            assert!((lifted - s[j].max(2.5)).abs() <= 1e-12 * lifted);
        }
    }
}
