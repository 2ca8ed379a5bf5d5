use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl RidgeFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// Ridge regression on centred data: solves `(AᵀA + αI) β = Aᵀy` with `A`
/// and `y` centred by their means, then recovers the intercept from the
/// means. `design` is row-major with `n_features` columns.
pub fn fit_ridge(design: &[f64], n_features: usize, y: &[f64], alpha: f64) -> Result<RidgeFit> {
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if design.len() != n * n_features {
        return Err(Error::ShapeMismatch(format!(
            "design has {} entries, expected {n}×{n_features}",
            design.len()
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("ridge alpha must be >= 0, got {alpha}")));
    }
    let p = n_features;
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    if p == 0 {
        return Ok(RidgeFit {
            coef: Vec::new(),
            intercept: y_mean,
        });
    }
    let mut x_mean = vec![0.0; p];
    for row in design.chunks_exact(p) {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= nf);

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut centred = vec![0.0; p];
    for (row, &yi) in design.chunks_exact(p).zip(y) {
        for (c, (v, m)) in centred.iter_mut().zip(row.iter().zip(&x_mean)) {
            *c = v - m;
        }
        let yc = yi - y_mean;
        for a in 0..p {
            rhs[a] += centred[a] * yc;
            for b in 0..=a {
                gram[a * p + b] += centred[a] * centred[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[b * p + a] = gram[a * p + b];
        }
        gram[a * p + a] += alpha;
    }
    let coef = cholesky_solve(&gram, &rhs, p)?;
    let intercept = y_mean - coef.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(RidgeFit { coef, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let fit = fit_ridge(&x, 1, &y, 0.0).unwrap();
        assert!((fit.coef[0] - 3.0).abs() < 1e-10);
        assert!(fit.intercept.abs() < 1e-10);
    }

    #[test]
    fn huge_penalty_gives_mean() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 1.0, 7.0, 6.0];
        let fit = fit_ridge(&x, 1, &y, 1e12).unwrap();
        assert!(fit.coef[0].abs() < 1e-9);
        assert!((fit.intercept - 4.0).abs() < 1e-8);
    }

    #[test]
    fn single_row_is_solvable() {
        let fit = fit_ridge(&[2.0, 5.0], 2, &[1.5], 1.0).unwrap();
        assert!(fit.coef.iter().all(|b| b.is_finite()));
        assert_eq!(fit.predict(&[2.0, 5.0]), 1.5);
    }

    #[test]
    fn singular_without_penalty() {
        // Two identical columns.
        let x = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        assert!(matches!(fit_ridge(&x, 2, &[1.0, 2.0, 3.0], 0.0), Err(Error::SingularSystem)));
        assert!(fit_ridge(&x, 2, &[1.0, 2.0, 3.0], 1e-3).is_ok());
    }

    #[test]
    fn matches_normal_equations() {
        // Hand solution of the centred normal equations for a 2-feature fit.
        let x = [0.0, 1.0, 1.0, 0.0, 2.0, 2.0, 3.0, 1.0];
        let y = [1.0, 2.0, 5.0, 4.0];
        let fit = fit_ridge(&x, 2, &y, 0.0).unwrap();
        let resid: Vec<f64> = x.chunks(2).zip(&y).map(|(r, yi)| yi - fit.predict(r)).collect();
        // Residuals are orthogonal to each centred feature and sum to zero.
        assert!(resid.iter().sum::<f64>().abs() < 1e-12);
        for j in 0..2 {
            let dot: f64 = x.chunks(2).zip(&resid).map(|(r, e)| r[j] * e).sum();
            assert!(dot.abs() < 1e-12);
        }
    }
}
