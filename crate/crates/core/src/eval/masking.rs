use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{nrmse, rmse, smape};
use super::report::{MaskingReport, MetricRow, OVERALL};
use crate::error::{Error, Result};
use crate::impute::{forward_fill, ImputerSpec};
use crate::ingest::StandardizationParams;
use crate::method::NamedMethod;
use crate::panel::{build_mask, MaskMatrix, PanelDataset};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskedCell {
    pub patient: usize,
    pub row: usize,
    pub variable: usize,
    /// The hidden observed value.
    pub truth: f64,
}

/// Observed cells hidden for evaluation (missing completely at random).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingPlan {
    pub fraction: f64,
    pub seed: u64,
    /// Sorted by patient, row, variable.
    pub cells: Vec<MaskedCell>,
}

/// Number of cells masked out of `n` observed: `p · n` rounded half away
/// from zero.
pub fn masked_count(p: f64, n: usize) -> usize {
    (p * n as f64).round().max(0.0) as usize
}

/// Hides `round(p · n_d)` observed cells of every variable `d`, chosen
/// uniformly without replacement.
pub fn mask_random(
    data: &PanelDataset,
    mask: &MaskMatrix,
    p: f64,
    seed: u64,
) -> Result<(PanelDataset, MaskMatrix, MaskingPlan)> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("masking fraction must be in (0, 1], got {p}")));
    }
    if !mask.matches(data) || *mask != build_mask(data) {
        return Err(Error::ShapeMismatch("mask does not describe the data".into()));
    }
    let mut rng = seed::rng(seed, "masking");
    let mut cells = Vec::new();
    for d in 0..data.n_vars() {
        let observed: Vec<(usize, usize)> = data
            .patients()
            .iter()
            .enumerate()
            .flat_map(|(i, pt)| (0..pt.len()).filter(move |&t| pt.is_observed(t, d)).map(move |t| (i, t)))
            .collect();
        if observed.is_empty() {
            return Err(Error::AllMissingColumn(d));
        }
        let k = masked_count(p, observed.len());
        for j in index::sample(&mut rng, observed.len(), k) {
            let (i, t) = observed[j];
            cells.push(MaskedCell {
                patient: i,
                row: t,
                variable: d,
                truth: data.get(i, t, d).expect("observed"),
            });
        }
    }
    cells.sort_by_key(|c| (c.patient, c.row, c.variable));

    let mut masked = data.clone();
    let mut masked_mask = mask.clone();
    for c in &cells {
        masked.patients_mut()[c.patient].set(c.row, c.variable, None);
        masked_mask.set(c.patient, c.row, c.variable, false);
    }
    Ok((
        masked,
        masked_mask,
        MaskingPlan {
            fraction: p,
            seed,
            cells,
        },
    ))
}

/// Per variable, fraction of all cells still missing after forward filling.
pub fn missing_rate_after_ffill(data: &PanelDataset, mask: &MaskMatrix) -> Result<Vec<f64>> {
    if !mask.matches(data) {
        return Err(Error::ShapeMismatch("mask differs from data".into()));
    }
    let filled = forward_fill(data);
    let total = data.n_rows();
    Ok((0..data.n_vars())
        .map(|d| {
            if total == 0 {
                return 0.0;
            }
            let missing = filled
                .patients()
                .iter()
                .map(|p| (0..p.len()).filter(|&t| !p.is_observed(t, d)).count())
                .sum::<usize>();
            missing as f64 / total as f64
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Random,
    ForwardFillSubset,
}

/// Masks a fraction of the observed cells once and scores every method on
/// the hidden cells. Metrics are computed on `data` as given (normally
/// standardised) and, when `standardizer` is supplied, also in original
/// units.
pub fn run_masking_benchmark(
    data: &PanelDataset,
    methods: &[NamedMethod],
    p: f64,
    seed: u64,
    standardizer: Option<&StandardizationParams>,
) -> Result<MaskingReport> {
    run(data, methods, p, seed, standardizer, Variant::Random)
}

/// As [`run_masking_benchmark`], but scores only hidden cells that forward
/// filling can reach, and always includes forward filling as a competitor.
pub fn run_ffill_subset_benchmark(
    data: &PanelDataset,
    methods: &[NamedMethod],
    p: f64,
    seed: u64,
    standardizer: Option<&StandardizationParams>,
) -> Result<MaskingReport> {
    run(data, methods, p, seed, standardizer, Variant::ForwardFillSubset)
}

fn run(
    data: &PanelDataset,
    methods: &[NamedMethod],
    p: f64,
    seed: u64,
    standardizer: Option<&StandardizationParams>,
    variant: Variant,
) -> Result<MaskingReport> {
    if methods.is_empty() {
        return Err(Error::InvalidParameter("no methods to evaluate".into()));
    }
    let mut methods = methods.to_vec();
    if variant == Variant::ForwardFillSubset && !methods.iter().any(|m| m.spec.is_forward_fill()) {
        methods.push(NamedMethod::imputer("forward_fill", ImputerSpec::forward_fill()));
    }
    let mask = build_mask(data);
    let (masked, masked_mask, plan) = mask_random(data, &mask, p, seed)?;

    let cells: Vec<MaskedCell> = match variant {
        Variant::Random => plan.cells.clone(),
        Variant::ForwardFillSubset => {
            let ff = forward_fill(&masked);
            plan.cells
                .iter()
                .copied()
                .filter(|c| ff.get(c.patient, c.row, c.variable).is_some())
                .collect()
        }
    };

    let estimates: Vec<PanelDataset> = methods
        .par_iter()
        .map(|m| m.spec.estimate(&masked, &masked_mask).map_err(|e| e.tagged(&m.name)))
        .collect::<Result<_>>()?;

    let n_vars = data.n_vars();
    let ranges: Vec<f64> = (0..n_vars)
        .map(|d| {
            let (lo, hi) = data
                .patients()
                .iter()
                .flat_map(|p| (0..p.len()).filter_map(move |t| p.get(t, d)))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            hi - lo
        })
        .collect();

    let mut rows = Vec::new();
    let mut original_rows = standardizer.map(|_| Vec::new());
    for (m, est) in methods.iter().zip(&estimates) {
        let mut truths = vec![Vec::new(); n_vars];
        let mut guesses = vec![Vec::new(); n_vars];
        let mut unfilled = 0;
        for c in &cells {
            match est.get(c.patient, c.row, c.variable) {
                Some(v) => {
                    truths[c.variable].push(c.truth);
                    guesses[c.variable].push(v);
                }
                None => unfilled += 1,
            }
        }
        if unfilled > 0 {
            return Err(Error::IncompleteOutput {
                method: m.name.clone(),
                cells: unfilled,
            });
        }
        rows.extend(score(&m.name, data, &truths, &guesses, &ranges, None)?);
        if let (Some(params), Some(orig)) = (standardizer, original_rows.as_mut()) {
            orig.extend(score(&m.name, data, &truths, &guesses, &ranges, Some(params))?);
        }
    }

    Ok(MaskingReport {
        variant: match variant {
            Variant::Random => "random".into(),
            Variant::ForwardFillSubset => "ffill_subset".into(),
        },
        seed,
        fraction: p,
        n_masked: plan.cells.len(),
        n_cells: cells.len(),
        methods,
        rows,
        original_rows,
    })
}

fn score(
    name: &str,
    data: &PanelDataset,
    truths: &[Vec<f64>],
    guesses: &[Vec<f64>],
    ranges: &[f64],
    params: Option<&StandardizationParams>,
) -> Result<Vec<MetricRow>> {
    let mut out = Vec::new();
    for (d, (y, y_hat)) in truths.iter().zip(guesses).enumerate() {
        if y.is_empty() {
            continue;
        }
        let (y, y_hat, range) = match params {
            Some(s) => (
                y.iter().map(|&v| s.invert_value(d, v)).collect::<Vec<_>>(),
                y_hat.iter().map(|&v| s.invert_value(d, v)).collect::<Vec<_>>(),
                ranges[d] * s.std[d],
            ),
            None => (y.clone(), y_hat.clone(), ranges[d]),
        };
        out.push(MetricRow {
            imputer: name.to_string(),
            variable: data.variables()[d].name.clone(),
            n_cells: y.len(),
            rmse: rmse(&y, &y_hat)?,
            nrmse: nrmse(&y, &y_hat, range)?,
            smape: smape(&y, &y_hat)?,
        });
    }
    if !out.is_empty() {
        let k = out.len() as f64;
        let overall = MetricRow {
            imputer: name.to_string(),
            variable: OVERALL.to_string(),
            n_cells: out.iter().map(|r| r.n_cells).sum(),
            rmse: out.iter().map(|r| r.rmse).sum::<f64>() / k,
            nrmse: out.iter().map(|r| r.nrmse).sum::<f64>() / k,
            smape: out.iter().map(|r| r.smape).sum::<f64>() / k,
        };
        out.push(overall);
    }
    Ok(out)
}
