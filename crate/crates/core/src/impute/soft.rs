//! Matrix completion by iterated soft-thresholded SVD.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::FlatMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftImputeParams {
    /// Shrinkage applied to every singular value. `None` picks
    /// `0.1 ×` the top singular value of the mean-filled matrix.
    pub lambda: Option<f64>,
    pub max_rank: Option<usize>,
    pub max_iter: usize,
    /// Stop once the relative Frobenius change over missing cells drops below this.
    pub tol: f64,
    /// Work on columns centred by their observed means.
    pub center: bool,
}

impl Default for SoftImputeParams {
    fn default() -> Self {
        Self {
            lambda: None,
            max_rank: None,
            max_iter: 100,
            tol: 1e-5,
            center: true,
        }
    }
}

impl SoftImputeParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter("soft_impute lambda must be >= 0".into()));
            }
        }
        if self.max_rank == Some(0) {
            return Err(Error::InvalidParameter("soft_impute max_rank must be >= 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("soft_impute max_iter must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("soft_impute tol must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SoftImputeOutcome {
    pub matrix: FlatMatrix,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `½‖P_obs(X − Z)‖² + λ‖Z‖_*` after each iteration (centred scale).
    pub objective: Vec<f64>,
}

pub fn soft_impute(m: &FlatMatrix, params: &SoftImputeParams) -> Result<SoftImputeOutcome> {
    params.validate()?;
    let (n, p) = (m.n_rows(), m.n_cols());
    let offsets: Vec<f64> = (0..p)
        .map(|c| {
            if params.center {
                m.column_mean(c)
            } else if m.observed_in_column(c).next().is_none() {
                Err(Error::AllMissingColumn(c))
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<_>>()?;

    let observed = DMatrix::from_fn(n, p, |r, c| m.is_observed(r, c));
    let target = DMatrix::from_fn(n, p, |r, c| m.get(r, c).map_or(0.0, |v| v - offsets[c]));
    let missing_cells = observed.iter().filter(|&&o| !o).count();
    if missing_cells == 0 {
        return Ok(SoftImputeOutcome {
            matrix: m.clone(),
            lambda: params.lambda.unwrap_or(0.0),
            iterations: 0,
            converged: true,
            objective: Vec::new(),
        });
    }

    let lambda = match params.lambda {
        Some(l) => l,
        None => 0.1 * target.clone().singular_values().max(),
    };

    let mut z = DMatrix::<f64>::zeros(n, p);
    let mut objective = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=params.max_iter {
        iterations = it;
        let filled = DMatrix::from_fn(n, p, |r, c| if observed[(r, c)] { target[(r, c)] } else { z[(r, c)] });
        let (next, nuclear) = shrink(filled, lambda, params.max_rank);

        let (mut diff, mut prev) = (0.0, 0.0);
        let mut fit = 0.0;
        for r in 0..n {
            for c in 0..p {
                if observed[(r, c)] {
                    fit += (target[(r, c)] - next[(r, c)]).powi(2);
                } else {
                    diff += (next[(r, c)] - z[(r, c)]).powi(2);
                    prev += z[(r, c)].powi(2);
                }
            }
        }
        objective.push(0.5 * fit + lambda * nuclear);
        z = next;
        let rel = if prev > 0.0 {
            (diff / prev).sqrt()
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if rel < params.tol {
            converged = true;
            break;
        }
    }

    let mut out = m.clone();
    for r in 0..n {
        for c in 0..p {
            if !observed[(r, c)] {
                out.set(r, c, z[(r, c)] + offsets[c]);
            }
        }
    }
    Ok(SoftImputeOutcome {
        matrix: out,
        lambda,
        iterations,
        converged,
        objective,
    })
}

/// Soft-thresholds the singular values of `a` by `lambda`, keeping at most
/// `max_rank` of them. Returns the reconstruction and its nuclear norm.
fn shrink(a: DMatrix<f64>, lambda: f64, max_rank: Option<usize>) -> (DMatrix<f64>, f64) {
    let (n, p) = a.shape();
    let svd = a.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));
    let keep = max_rank.unwrap_or(idx.len()).min(idx.len());
    let mut out = DMatrix::<f64>::zeros(n, p);
    let mut nuclear = 0.0;
    for &k in &idx[..keep] {
        let s = svd.singular_values[k] - lambda;
        if s <= 0.0 {
            break;
        }
        nuclear += s;
        out += (u.column(k) * s) * v_t.row(k);
    }
    (out, nuclear)
}
