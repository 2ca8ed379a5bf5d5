use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{MaskMatrix, PanelDataset};

/// How the cohort-average measurement gap of a variable is formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMode {
    /// Mean over all consecutive-measurement gaps of all patients.
    #[default]
    Pooled,
    /// Mean of per-patient mean gaps.
    PerPatient,
}

/// The three inputs of the fusion weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TdiStatistics {
    /// Per patient, row-major `t_i × D` hours since the variable was last
    /// observed (0 when observed now, `+∞` when never before).
    pub delta: Vec<Vec<f64>>,
    /// Per patient, fraction of the `D` variables observed at each row.
    pub availability: Vec<Vec<f64>>,
    /// Per variable, reciprocal of the average gap in hours (0 if no gaps).
    pub frequency: Vec<f64>,
}

impl TdiStatistics {
    pub fn compute(data: &PanelDataset, mask: &MaskMatrix, mode: FrequencyMode) -> Result<Self> {
        check(data, mask)?;
        Ok(Self {
            delta: compute_deltas(data, mask)?,
            availability: compute_availability(mask),
            frequency: compute_frequencies(data, mask, mode)?,
        })
    }
}

fn check(data: &PanelDataset, mask: &MaskMatrix) -> Result<()> {
    if mask.matches(data) {
        Ok(())
    } else {
        Err(Error::ShapeMismatch("mask differs from data".into()))
    }
}

pub fn compute_deltas(data: &PanelDataset, mask: &MaskMatrix) -> Result<Vec<Vec<f64>>> {
    check(data, mask)?;
    let n_vars = data.n_vars();
    Ok(data
        .patients()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let ts = p.timestamps();
            let mut out = vec![0.0; p.len() * n_vars];
            for d in 0..n_vars {
                let mut last: Option<f64> = None;
                for (t, &s) in ts.iter().enumerate() {
                    if mask.get(i, t, d) {
                        out[t * n_vars + d] = 0.0;
                        last = Some(s);
                    } else {
                        out[t * n_vars + d] = last.map_or(f64::INFINITY, |l| s - l);
                    }
                }
            }
            out
        })
        .collect())
}

pub fn compute_availability(mask: &MaskMatrix) -> Vec<Vec<f64>> {
    let n_vars = mask.n_vars();
    (0..mask.n_patients())
        .map(|i| {
            mask.patient(i)
                .chunks_exact(n_vars.max(1))
                .map(|row| row.iter().filter(|&&b| b).count() as f64 / n_vars as f64)
                .collect()
        })
        .collect()
}

pub fn compute_frequencies(data: &PanelDataset, mask: &MaskMatrix, mode: FrequencyMode) -> Result<Vec<f64>> {
    check(data, mask)?;
    let n_vars = data.n_vars();
    let mut out = Vec::with_capacity(n_vars);
    for d in 0..n_vars {
        // (sum of gaps, number of gaps) overall, and the per-patient mean gaps.
        let (mut sum, mut count) = (0.0, 0usize);
        let mut patient_means = Vec::new();
        for (i, p) in data.patients().iter().enumerate() {
            let (mut ps, mut pc) = (0.0, 0usize);
            let mut last: Option<f64> = None;
            for (t, &s) in p.timestamps().iter().enumerate() {
                if mask.get(i, t, d) {
                    if let Some(l) = last {
                        ps += s - l;
                        pc += 1;
                    }
                    last = Some(s);
                }
            }
            sum += ps;
            count += pc;
            if pc > 0 {
                patient_means.push(ps / pc as f64);
            }
        }
        let mean_gap = match mode {
            FrequencyMode::Pooled if count > 0 => Some(sum / count as f64),
            FrequencyMode::PerPatient if !patient_means.is_empty() => {
                Some(patient_means.iter().sum::<f64>() / patient_means.len() as f64)
            }
            _ => None,
        };
        out.push(mean_gap.map_or(0.0, |g| 1.0 / g));
    }
    Ok(out)
}
