//! Time-dependent fusion of forward filling and iterative imputation.
//!
//! Every missing cell that forward filling can reach gets
//! `w · x_ff + (1 − w) · x_iter`, where the weight shrinks with the time since
//! the variable was last seen, the variable's measurement frequency and the
//! row's availability. Cells forward filling cannot reach take the iterative
//! estimate as is.

mod stats;
mod weight;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use stats::{
    compute_availability, compute_deltas, compute_frequencies, FrequencyMode, TdiStatistics,
};
pub use weight::{weight, WeightConfig, WeightFamily};

use crate::error::{Error, Result};
use crate::impute::{flatten, forward_fill, iterative_impute, unflatten, IterativeParams};
use crate::panel::{merge_with, ImputationResult, MaskMatrix, PanelDataset, Provenance};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdiSpec {
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub iterative: IterativeParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub frequency_mode: FrequencyMode,
}

impl TdiSpec {
    pub fn validate(&self) -> Result<()> {
        self.weight.validate()?;
        self.iterative.validate()
    }
}

pub fn tdi_impute(data: &PanelDataset, mask: &MaskMatrix, spec: &TdiSpec) -> Result<ImputationResult> {
    tdi_impute_with_frequencies(data, mask, spec, None)
}

/// As [`tdi_impute`], but with measurement frequencies supplied by the
/// caller (e.g. estimated on a training fold) instead of computed from `data`.
pub fn tdi_impute_with_frequencies(
    data: &PanelDataset,
    mask: &MaskMatrix,
    spec: &TdiSpec,
    frequencies: Option<&[f64]>,
) -> Result<ImputationResult> {
    spec.validate()?;
    if !mask.matches(data) {
        return Err(Error::ShapeMismatch("mask differs from data".into()));
    }
    if let Some(f) = frequencies {
        if f.len() != data.n_vars() {
            return Err(Error::ShapeMismatch(format!(
                "{} frequencies for {} variables",
                f.len(),
                data.n_vars()
            )));
        }
    }

    let ff = forward_fill(data);
    let (flat, index) = flatten(data);
    let iterated = iterative_impute(&flat, &spec.iterative, spec.seed)?;
    let it = unflatten(&iterated.matrix, &index, data)?;

    let delta = compute_deltas(data, mask)?;
    let availability = compute_availability(mask);
    let computed;
    let frequency = match frequencies {
        Some(f) => f,
        None => {
            computed = compute_frequencies(data, mask, spec.frequency_mode)?;
            &computed
        }
    };

    let n_vars = data.n_vars();
    let mut estimate = it.clone();
    let mut tags: Vec<Vec<Provenance>> = Vec::with_capacity(data.n_patients());
    for (i, patient) in estimate.patients_mut().iter_mut().enumerate() {
        let mut row_tags = vec![Provenance::Observed; patient.len() * n_vars];
        for t in 0..patient.len() {
            for d in 0..n_vars {
                if mask.get(i, t, d) {
                    continue;
                }
                let x_it = it.get(i, t, d).expect("iterative output is complete");
                let k = t * n_vars + d;
                match ff.get(i, t, d) {
                    Some(x_ff) => {
                        let w = weight(frequency[d], availability[i][t], delta[i][k], &spec.weight)?;
                        patient.set(t, d, Some(fuse(x_ff, x_it, w)));
                        row_tags[k] = Provenance::Fused(w);
                    }
                    None => row_tags[k] = Provenance::Iterative,
                }
            }
        }
        tags.push(row_tags);
    }
    merge_with(data, mask, &estimate, |i, t, d| tags[i][t * n_vars + d])
}

/// `w · x_ff + (1 − w) · x_iter`, kept inside the interval spanned by the
/// two estimates.
pub fn fuse(x_ff: f64, x_iter: f64, w: f64) -> f64 {
    (w * x_ff + (1.0 - w) * x_iter).clamp(x_ff.min(x_iter), x_ff.max(x_iter))
}

/// `m` imputations plus per-cell mean and unbiased variance across them.
#[derive(Debug, Clone)]
pub struct MultipleImputation {
    pub results: Vec<ImputationResult>,
    pub seeds: Vec<u64>,
    /// Per patient, row-major `t_i × D`.
    pub mean: Vec<Vec<f64>>,
    pub variance: Vec<Vec<f64>>,
}

/// Runs TDI `m` times with seeds `spec.seed, spec.seed + 1, …`. The
/// iterative component samples from its predictive distribution so the runs
/// differ; observed cells are identical across runs and have zero variance.
pub fn multiple_impute(
    data: &PanelDataset,
    mask: &MaskMatrix,
    spec: &TdiSpec,
    m: usize,
) -> Result<MultipleImputation> {
    if m < 2 {
        return Err(Error::InvalidParameter("multiple imputation needs m >= 2".into()));
    }
    let seeds: Vec<u64> = (0..m as u64).map(|k| spec.seed.wrapping_add(k)).collect();
    let results = seeds
        .par_iter()
        .map(|&seed| {
            let mut run = spec.clone();
            run.seed = seed;
            run.iterative.sample_posterior = true;
            tdi_impute(data, mask, &run)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mean = Vec::with_capacity(data.n_patients());
    let mut variance = Vec::with_capacity(data.n_patients());
    for i in 0..data.n_patients() {
        let cells = data.patient(i).raw_values().len();
        let mut mu = vec![0.0; cells];
        let mut m2 = vec![0.0; cells];
        for (k, r) in results.iter().enumerate() {
            for (c, &x) in r.values.patient(i).raw_values().iter().enumerate() {
                let old = mu[c];
                mu[c] += (x - old) / (k + 1) as f64;
                m2[c] += (x - old) * (x - mu[c]);
            }
        }
        variance.push(m2.into_iter().map(|s| s / (m - 1) as f64).collect());
        mean.push(mu);
    }
    Ok(MultipleImputation {
        results,
        seeds,
        mean,
        variance,
    })
}
