//! Chained-equations imputation with ridge regressors.
//!
//! Missing cells start at their column mean. Each round visits the columns
//! that have missing cells, most-missing first (ties by index), regresses the
//! column on all the others over its observed rows and overwrites its
//! missing cells with the predictions.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ridge::fit_ridge;
use super::FlatMatrix;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterativeParams {
    pub max_iter: usize,
    /// Early stop once every column's largest update in a round is below
    /// `tol` times the column's observed standard deviation.
    pub tol: f64,
    pub ridge_alpha: f64,
    /// Clip predictions to the observed `[min, max]` of the column.
    pub clip: bool,
    /// Add Gaussian noise with the regression's residual scale to every
    /// prediction. Needed for multiple imputation; disables early stopping.
    pub sample_posterior: bool,
}

impl Default for IterativeParams {
    fn default() -> Self {
        Self {
            max_iter: 10,
            tol: 1e-3,
            ridge_alpha: 1e-3,
            clip: true,
            sample_posterior: false,
        }
    }
}

impl IterativeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("iterative max_iter must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("iterative tol must be > 0".into()));
        }
        if !(self.ridge_alpha >= 0.0 && self.ridge_alpha.is_finite()) {
            return Err(Error::InvalidParameter("ridge_alpha must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IterativeOutcome {
    pub matrix: FlatMatrix,
    /// Rounds executed; 0 when nothing was missing.
    pub rounds: usize,
    pub converged: bool,
}

struct ColumnStats {
    mean: f64,
    min: f64,
    max: f64,
    std: f64,
}

fn column_stats(m: &FlatMatrix, c: usize) -> Result<ColumnStats> {
    let vals: Vec<f64> = m.observed_in_column(c).collect();
    if vals.is_empty() {
        return Err(Error::AllMissingColumn(c));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
    let (min, max) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(ColumnStats { mean, min, max, std })
}

pub fn iterative_impute(m: &FlatMatrix, params: &IterativeParams, seed: u64) -> Result<IterativeOutcome> {
    params.validate()?;
    let p = m.n_cols();
    if p < 2 {
        return Err(Error::InvalidParameter(
            "iterative imputation needs at least two columns".into(),
        ));
    }
    let stats = (0..p).map(|c| column_stats(m, c)).collect::<Result<Vec<_>>>()?;

    let missing_rows: Vec<Vec<usize>> = (0..p)
        .map(|c| (0..m.n_rows()).filter(|&r| !m.is_observed(r, c)).collect())
        .collect();
    let observed_rows: Vec<Vec<usize>> = (0..p)
        .map(|c| (0..m.n_rows()).filter(|&r| m.is_observed(r, c)).collect())
        .collect();
    let mut order: Vec<usize> = (0..p).filter(|&c| !missing_rows[c].is_empty()).collect();
    order.sort_by(|&a, &b| missing_rows[b].len().cmp(&missing_rows[a].len()).then(a.cmp(&b)));

    let mut x = m.clone();
    for &c in &order {
        for &r in &missing_rows[c] {
            x.set(r, c, stats[c].mean);
        }
    }
    if order.is_empty() {
        return Ok(IterativeOutcome {
            matrix: x,
            rounds: 0,
            converged: true,
        });
    }

    let mut rng = seed::rng(seed, "iterative/posterior");
    let mut design = Vec::new();
    let mut target = Vec::new();
    let mut features = vec![0.0; p - 1];
    let mut rounds = 0;
    let mut converged = false;
    for round in 1..=params.max_iter {
        rounds = round;
        let mut settled = true;
        for &c in &order {
            design.clear();
            target.clear();
            for &r in &observed_rows[c] {
                let row = x.raw_row(r);
                design.extend(row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, v)| *v));
                target.push(row[c]);
            }
            let fit = fit_ridge(&design, p - 1, &target, params.ridge_alpha)?;
            let sigma = if params.sample_posterior {
                let rss: f64 = design
                    .chunks_exact(p - 1)
                    .zip(&target)
                    .map(|(row, y)| (y - fit.predict(row)).powi(2))
                    .sum();
                (rss / (target.len().saturating_sub(1)).max(1) as f64).sqrt()
            } else {
                0.0
            };

            let mut max_change: f64 = 0.0;
            for &r in &missing_rows[c] {
                let row = x.raw_row(r);
                for (slot, v) in features
                    .iter_mut()
                    .zip(row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, v)| *v))
                {
                    *slot = v;
                }
                let mut pred = fit.predict(&features);
                if params.sample_posterior {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    pred += sigma * z;
                }
                if params.clip {
                    pred = pred.clamp(stats[c].min, stats[c].max);
                }
                max_change = max_change.max((pred - row[c]).abs());
                x.set(r, c, pred);
            }
            if max_change >= params.tol * stats[c].std {
                settled = false;
            }
        }
        if settled && !params.sample_posterior {
            converged = true;
            break;
        }
    }
    Ok(IterativeOutcome {
        matrix: x,
        rounds,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact() -> IterativeParams {
        IterativeParams {
            ridge_alpha: 1e-6,
            clip: false,
            ..IterativeParams::default()
        }
    }

    #[test]
    fn recovers_linear_relation() {
        let n = 50;
        let rows: Vec<Vec<Option<f64>>> = (0..n)
            .map(|i| {
                let x1 = (i as f64 * 0.37).sin() * 3.0 + i as f64 * 0.1;
                let x2 = if i % 5 == 2 { None } else { Some(2.0 * x1) };
                vec![Some(x1), x2]
            })
            .collect();
        let m = FlatMatrix::from_rows(&rows).unwrap();
        let out = iterative_impute(&m, &exact(), 0).unwrap();
        for r in 0..n {
            let x1 = out.matrix.get(r, 0).unwrap();
            assert!((out.matrix.get(r, 1).unwrap() - 2.0 * x1).abs() < 1e-6);
        }
        assert!(out.converged);
        assert!(out.rounds <= 10);
    }

    #[test]
    fn complete_input_is_untouched() {
        let m = FlatMatrix::from_rows(&[vec![Some(1.0), Some(2.0)], vec![Some(3.0), Some(5.0)]]).unwrap();
        let out = iterative_impute(&m, &IterativeParams::default(), 0).unwrap();
        assert_eq!(out.matrix, m);
        assert_eq!(out.rounds, 0);
    }

    #[test]
    fn constant_columns_give_intercept() {
        let m = FlatMatrix::from_rows(&[
            vec![Some(4.0), None],
            vec![Some(4.0), Some(-2.0)],
            vec![None, Some(-2.0)],
            vec![Some(4.0), Some(-2.0)],
        ])
        .unwrap();
        let out = iterative_impute(&m, &IterativeParams::default(), 0).unwrap();
        assert!((out.matrix.get(0, 1).unwrap() + 2.0).abs() < 1e-12);
        assert!((out.matrix.get(2, 0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn clipping_bounds_predictions() {
        let rows: Vec<Vec<Option<f64>>> = (0..20)
            .map(|i| {
                let x1 = i as f64;
                vec![Some(x1), if i >= 15 { None } else { Some(x1) }]
            })
            .collect();
        let m = FlatMatrix::from_rows(&rows).unwrap();
        let out = iterative_impute(&m, &IterativeParams::default(), 0).unwrap();
        for r in 15..20 {
            assert_eq!(out.matrix.get(r, 1), Some(14.0));
        }
    }

    #[test]
    fn errors() {
        let one = FlatMatrix::from_rows(&[vec![Some(1.0)], vec![None]]).unwrap();
        assert!(matches!(
            iterative_impute(&one, &IterativeParams::default(), 0),
            Err(Error::InvalidParameter(_))
        ));
        let empty_col = FlatMatrix::from_rows(&[vec![Some(1.0), None], vec![Some(2.0), None]]).unwrap();
        assert!(matches!(
            iterative_impute(&empty_col, &IterativeParams::default(), 0),
            Err(Error::AllMissingColumn(1))
        ));
    }

    #[test]
    fn posterior_sampling_depends_on_seed() {
        let rows: Vec<Vec<Option<f64>>> = (0..30)
            .map(|i| {
                let x1 = (i as f64 * 1.3).cos();
                let noise = ((i * 7919) % 13) as f64 / 13.0 - 0.5;
                vec![Some(x1), if i % 3 == 0 { None } else { Some(x1 + noise) }]
            })
            .collect();
        let m = FlatMatrix::from_rows(&rows).unwrap();
        let params = IterativeParams {
            sample_posterior: true,
            ..IterativeParams::default()
        };
        let a = iterative_impute(&m, &params, 1).unwrap().matrix;
        let b = iterative_impute(&m, &params, 1).unwrap().matrix;
        let c = iterative_impute(&m, &params, 2).unwrap().matrix;
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
