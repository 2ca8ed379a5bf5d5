use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cohort::LabelRecord;
use super::logistic::sigmoid;
use crate::error::{Error, Result};
use crate::ingest::{generate_synthetic, SyntheticConfig};
use crate::panel::PanelDataset;
use crate::seed;

/// Synthetic panel plus binary outcomes driven by the true values of two
/// variables near the end of the observation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohortConfig {
    pub panel: SyntheticConfig,
    pub label_variables: [usize; 2],
    /// Weights on the two variables' standardised true values.
    pub coefficients: [f64; 2],
    pub intercept: f64,
    pub window_hours: f64,
    /// Rows (the last ones inside the window) averaged into the risk score.
    pub n_obs: usize,
}

pub struct SyntheticCohort {
    pub truth: PanelDataset,
    pub observed: PanelDataset,
    pub labels: Vec<LabelRecord>,
    /// Linear risk score per patient.
    pub risk: Vec<f64>,
}

pub fn generate_synthetic_cohort(cfg: &SyntheticCohortConfig) -> Result<SyntheticCohort> {
    let panel = generate_synthetic(&cfg.panel)?;
    let n_vars = panel.truth.n_vars();
    if cfg.label_variables.iter().any(|&d| d >= n_vars) {
        return Err(Error::InvalidParameter(format!(
            "label variables {:?} out of range for {n_vars} variables",
            cfg.label_variables
        )));
    }
    if cfg.n_obs == 0 {
        return Err(Error::InvalidParameter("n_obs must be at least 1".into()));
    }

    // Standardise each label variable over all true cells.
    let moments: Vec<(f64, f64)> = cfg
        .label_variables
        .iter()
        .map(|&d| {
            let vals: Vec<f64> = panel
                .truth
                .patients()
                .iter()
                .flat_map(|p| (0..p.len()).filter_map(move |t| p.get(t, d)))
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            (mean, if sd > 0.0 { sd } else { 1.0 })
        })
        .collect();

    let mut rng = seed::rng(cfg.panel.seed, "cohort/labels");
    let mut labels = Vec::with_capacity(panel.truth.n_patients());
    let mut risk = Vec::with_capacity(panel.truth.n_patients());
    for p in panel.truth.patients() {
        let end = p.timestamps().partition_point(|&t| t < cfg.window_hours);
        let start = end.saturating_sub(cfg.n_obs);
        if start == end {
            return Err(Error::InsufficientObservations(p.id().to_string()));
        }
        let mut score = cfg.intercept;
        for (j, &d) in cfg.label_variables.iter().enumerate() {
            let (mean, sd) = moments[j];
            let avg = (start..end).map(|t| (p.get(t, d).expect("truth is complete") - mean) / sd).sum::<f64>()
                / (end - start) as f64;
            score += cfg.coefficients[j] * avg;
        }
        let label = rng.random::<f64>() < sigmoid(score);
        labels.push(LabelRecord {
            patient_id: p.id().to_string(),
            label,
            event_hours: None,
        });
        risk.push(score);
    }
    Ok(SyntheticCohort {
        truth: panel.truth,
        observed: panel.observed,
        labels,
        risk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SyntheticCohortConfig {
        SyntheticCohortConfig {
            panel: SyntheticConfig {
                n_patients: 40,
                n_timepoints: 10,
                n_variables: 3,
                temporal_corr: 0.8,
                cross_corr: 0.3,
                missing_profile: vec![0.3],
                seed: 9,
            },
            label_variables: [0, 1],
            coefficients: [2.0, 2.0],
            intercept: 0.0,
            window_hours: 48.0,
            n_obs: 2,
        }
    }

    #[test]
    fn deterministic_and_informative() {
        let a = generate_synthetic_cohort(&cfg()).unwrap();
        let b = generate_synthetic_cohort(&cfg()).unwrap();
        assert_eq!(a.labels, b.labels);
        let n_pos = a.labels.iter().filter(|l| l.label).count();
        assert!(n_pos > 5 && n_pos < 35);
        let labels: Vec<bool> = a.labels.iter().map(|l| l.label).collect();
        let au = crate::predict::auroc(&labels, &a.risk).unwrap();
        assert!(au > 0.7, "risk AUROC {au}");
    }

    #[test]
    fn bad_variable() {
        let mut c = cfg();
        c.label_variables = [0, 7];
        assert!(generate_synthetic_cohort(&c).is_err());
    }
}
