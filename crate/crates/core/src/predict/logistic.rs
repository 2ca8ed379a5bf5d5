use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    /// Penalty `α/2 · ‖w‖²` added to the mean log-loss; the intercept is not
    /// penalised.
    pub l2_alpha: f64,
    pub max_iter: usize,
    /// Stop once the gradient's max-norm falls to this value.
    pub tol: f64,
    /// Z-score feature columns with training statistics before fitting.
    pub scale_features: bool,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2_alpha: 1e-2,
            max_iter: 100,
            tol: 1e-8,
            scale_features: true,
        }
    }
}

impl LogisticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_alpha >= 0.0 && self.l2_alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "l2_alpha must be finite and >= 0, got {}",
                self.l2_alpha
            )));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("max_iter and tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
    /// Column centring and scaling applied before `coef`.
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticModel {
    /// Linear score `w · z + b` on scaled features.
    pub fn decision(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .zip(&self.scale)
            .zip(&self.coef)
            .map(|(((v, c), s), w)| w * (v - c) / s)
            .sum::<f64>()
            + self.intercept
    }

    pub fn predict_proba(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_finite(features, self.coef.len())?;
        Ok(features.iter().map(|x| sigmoid(self.decision(x))).collect())
    }
}

/// Logistic function kept strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn check_finite(features: &[Vec<f64>], p: usize) -> Result<()> {
    for (i, row) in features.iter().enumerate() {
        if row.len() != p {
            return Err(Error::ShapeMismatch(format!(
                "example {i} has {} features, expected {p}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: i, col: j });
        }
    }
    Ok(())
}

/// L2-regularised logistic regression fitted by damped Newton steps with
/// backtracking on the penalised mean log-loss.
pub fn fit_logistic(features: &[Vec<f64>], labels: &[bool], params: &LogisticParams) -> Result<LogisticModel> {
    params.validate()?;
    if features.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} examples vs {} labels",
            features.len(),
            labels.len()
        )));
    }
    let p = features.first().map_or(0, Vec::len);
    check_finite(features, p)?;
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::SingleClass);
    }
    let n = features.len();
    let nf = n as f64;

    let (center, scale) = if params.scale_features {
        let mut center = vec![0.0; p];
        let mut scale = vec![0.0; p];
        for j in 0..p {
            let mean = features.iter().map(|r| r[j]).sum::<f64>() / nf;
            let var = features.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / nf;
            center[j] = mean;
            scale[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        (center, scale)
    } else {
        (vec![0.0; p], vec![1.0; p])
    };
    // Design with a trailing intercept column.
    let q = p + 1;
    let z: Vec<f64> = features
        .iter()
        .flat_map(|r| {
            r.iter()
                .zip(&center)
                .zip(&scale)
                .map(|((v, c), s)| (v - c) / s)
                .chain(std::iter::once(1.0))
                .collect::<Vec<_>>()
        })
        .collect();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let alpha = params.l2_alpha;

    let eta = |theta: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| z[i * q..(i + 1) * q].iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    };
    let loss = |theta: &[f64]| -> f64 {
        let e = eta(theta);
        let data: f64 = e.iter().zip(&y).map(|(&e, &y)| softplus(e) - y * e).sum::<f64>() / nf;
        data + 0.5 * alpha * theta[..p].iter().map(|w| w * w).sum::<f64>()
    };

    let mut theta = vec![0.0; q];
    let mut current = loss(&theta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        let e = eta(&theta);
        let mut grad = vec![0.0; q];
        let mut hess = vec![0.0; q * q];
        for i in 0..n {
            let row = &z[i * q..(i + 1) * q];
            let mu = sigmoid(e[i]);
            let r = mu - y[i];
            let w = mu * (1.0 - mu);
            for a in 0..q {
                grad[a] += r * row[a] / nf;
                for b in 0..=a {
                    hess[a * q + b] += w * row[a] * row[b] / nf;
                }
            }
        }
        for a in 0..q {
            for b in 0..a {
                hess[b * q + a] = hess[a * q + b];
            }
        }
        for a in 0..p {
            grad[a] += alpha * theta[a];
            hess[a * q + a] += alpha;
        }
        if grad.iter().fold(0.0_f64, |m, g| m.max(g.abs())) <= params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let step = match cholesky_solve(&hess, &grad, q) {
            Ok(s) => s,
            Err(Error::SingularSystem) => {
                let mut damped = hess.clone();
                let bump = 1e-8 * (1.0 + (0..q).map(|a| hess[a * q + a]).fold(0.0, f64::max));
                for a in 0..q {
                    damped[a * q + a] += bump;
                }
                cholesky_solve(&damped, &grad, q)?
            }
            Err(e) => return Err(e),
        };
        let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(th, s)| th - t * s).collect();
            let value = loss(&trial);
            if value <= current - 1e-4 * t * slope {
                theta = trial;
                current = value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No further decrease representable in floating point.
            break;
        }
    }

    Ok(LogisticModel {
        coef: theta[..p].to_vec(),
        intercept: theta[p],
        center,
        scale,
        iterations,
        converged,
    })
}

/// Pluggable binary classifier used by cross-validation.
pub trait Classifier: Sync {
    fn name(&self) -> &str;

    /// Fits on the training set and returns ranking scores for `test`
    /// (larger means more likely positive).
    fn fit_score(&self, train: &[Vec<f64>], labels: &[bool], test: &[Vec<f64>]) -> Result<Vec<f64>>;
}

impl Classifier for LogisticParams {
    fn name(&self) -> &str {
        "logistic"
    }

    fn fit_score(&self, train: &[Vec<f64>], labels: &[bool], test: &[Vec<f64>]) -> Result<Vec<f64>> {
        let model = fit_logistic(train, labels, self)?;
        check_finite(test, model.coef.len())?;
        Ok(test.iter().map(|x| model.decision(x)).collect())
    }
}
