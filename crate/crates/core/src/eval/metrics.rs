use crate::error::{Error, Result};

fn check(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if y.len() != y_hat.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} truths vs {} estimates",
            y.len(),
            y_hat.len()
        )));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat)?;
    let ss: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / y.len() as f64).sqrt())
}

/// RMSE divided by `range = y_max − y_min`.
pub fn nrmse(y: &[f64], y_hat: &[f64], range: f64) -> Result<f64> {
    if !(range > 0.0) {
        return Err(Error::ZeroRange);
    }
    Ok(rmse(y, y_hat)? / range)
}

/// Mean of `|ŷ − y| / ((ŷ + y) / 2)`. Terms whose denominator vanishes
/// (`|ŷ + y| < 1e-12`) contribute 0 but still count towards the mean.
pub fn smape(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat)?;
    let total: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(&a, &b)| {
            let den = (b + a) / 2.0;
            if (b + a).abs() < 1e-12 {
                0.0
            } else {
                (b - a).abs() / den
            }
        })
        .sum();
    Ok(total / y.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs() {
        let y = [1.0, -2.0, 3.5];
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        assert_eq!(smape(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn hand_values() {
        assert!((rmse(&[1.0, 3.0], &[2.0, 5.0]).unwrap() - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(smape(&[1.0], &[3.0]).unwrap(), 1.0);
        assert_eq!(nrmse(&[0.0, 0.0], &[2.0, 2.0], 4.0).unwrap(), 0.5);
    }

    #[test]
    fn zero_denominator_counts_as_zero() {
        assert_eq!(smape(&[1.0, 2.0], &[-1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(rmse(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(nrmse(&[1.0], &[1.0], 0.0), Err(Error::ZeroRange)));
    }
}
