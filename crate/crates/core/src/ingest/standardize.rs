use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;

/// Per-variable location and scale. `std` is the population standard
/// deviation of the observed cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Variables whose variance was zero; their scale was clamped to 1.
    #[serde(default)]
    pub degenerate: Vec<usize>,
}

impl StandardizationParams {
    pub fn apply_value(&self, d: usize, x: f64) -> f64 {
        (x - self.mean[d]) / self.std[d]
    }

    pub fn invert_value(&self, d: usize, z: f64) -> f64 {
        z * self.std[d] + self.mean[d]
    }
}

pub fn fit_standardizer(data: &PanelDataset) -> Result<StandardizationParams> {
    let n_vars = data.n_vars();
    let mut sum = vec![0.0; n_vars];
    let mut count = vec![0usize; n_vars];
    for p in data.patients() {
        for t in 0..p.len() {
            for (d, v) in p.row(t).enumerate() {
                if let Some(v) = v {
                    sum[d] += v;
                    count[d] += 1;
                }
            }
        }
    }
    if let Some(d) = count.iter().position(|&c| c == 0) {
        return Err(Error::AllMissingColumn(d));
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    let mut ss = vec![0.0; n_vars];
    for p in data.patients() {
        for t in 0..p.len() {
            for (d, v) in p.row(t).enumerate() {
                if let Some(v) = v {
                    ss[d] += (v - mean[d]).powi(2);
                }
            }
        }
    }
    let mut degenerate = Vec::new();
    let std = ss
        .iter()
        .zip(&count)
        .enumerate()
        .map(|(d, (s, &c))| {
            let sd = (s / c as f64).sqrt();
            if sd > 0.0 {
                sd
            } else {
                log::warn!(
                    "variable `{}` has zero variance; scale clamped to 1",
                    data.variables()[d].name
                );
                degenerate.push(d);
                1.0
            }
        })
        .collect();
    Ok(StandardizationParams {
        mean,
        std,
        degenerate,
    })
}

fn map_observed(
    data: &PanelDataset,
    params: &StandardizationParams,
    f: impl Fn(usize, f64) -> f64,
) -> Result<PanelDataset> {
    if params.mean.len() != data.n_vars() || params.std.len() != data.n_vars() {
        return Err(Error::ShapeMismatch(
            "standardisation parameters do not match the panel".into(),
        ));
    }
    let mut out = data.clone();
    for p in out.patients_mut() {
        for t in 0..p.len() {
            for d in 0..p.n_vars() {
                if let Some(v) = p.get(t, d) {
                    p.set(t, d, Some(f(d, v)));
                }
            }
        }
    }
    Ok(out)
}

pub fn apply_standardizer(data: &PanelDataset, params: &StandardizationParams) -> Result<PanelDataset> {
    map_observed(data, params, |d, v| params.apply_value(d, v))
}

pub fn invert_standardizer(data: &PanelDataset, params: &StandardizationParams) -> Result<PanelDataset> {
    map_observed(data, params, |d, v| params.invert_value(d, v))
}
