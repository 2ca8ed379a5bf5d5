use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{ImputationResult, MaskMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Rows with `time < window_hours` are eligible.
    pub window_hours: f64,
    /// How many of the latest eligible rows to use.
    pub n_obs: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            window_hours: 48.0,
            n_obs: 2,
        }
    }
}

impl FeatureConfig {
    pub fn len(&self, n_vars: usize, n_statics: usize) -> usize {
        self.n_obs * 2 * n_vars + n_statics
    }
}

/// Fixed-length feature vectors, one per patient: for each of the last
/// `n_obs` rows inside the window (oldest first), the D imputed values
/// followed by the D mask bits, then the static covariates.
pub fn extract_baseline_features(
    imputed: &ImputationResult,
    mask: &MaskMatrix,
    cfg: &FeatureConfig,
    statics: Option<&[Vec<f64>]>,
) -> Result<Vec<Vec<f64>>> {
    let data = &imputed.values;
    if !mask.matches(data) {
        return Err(Error::ShapeMismatch("mask differs from imputed panel".into()));
    }
    if let Some(s) = statics {
        if s.len() != data.n_patients() {
            return Err(Error::ShapeMismatch(format!(
                "{} static rows for {} patients",
                s.len(),
                data.n_patients()
            )));
        }
    }
    if cfg.n_obs == 0 {
        return Err(Error::InvalidParameter("n_obs must be at least 1".into()));
    }
    let n_vars = data.n_vars();
    data.patients()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let in_window = p.timestamps().partition_point(|&t| t < cfg.window_hours);
            if in_window < cfg.n_obs {
                return Err(Error::InsufficientObservations(p.id().to_string()));
            }
            let mut f = Vec::with_capacity(cfg.len(n_vars, statics.map_or(0, |s| s[i].len())));
            for t in in_window - cfg.n_obs..in_window {
                for d in 0..n_vars {
                    f.push(p.get(t, d).ok_or(Error::IncompleteEstimate {
                        patient: i,
                        row: t,
                        variable: d,
                    })?);
                }
                f.extend(mask.row(i, t).iter().map(|&m| if m { 1.0 } else { 0.0 }));
            }
            if let Some(s) = statics {
                f.extend_from_slice(&s[i]);
            }
            Ok(f)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impute::ImputerSpec;
    use crate::panel::{build_mask, PanelDataset, PatientSeries, VariableMeta};

    fn panel() -> PanelDataset {
        let p = PatientSeries::new(
            "p",
            vec![1.0, 20.0, 47.0, 50.0],
            vec![
                vec![Some(1.0), Some(10.0)],
                vec![Some(2.0), None],
                vec![None, Some(30.0)],
                vec![Some(4.0), Some(40.0)],
            ],
        )
        .unwrap();
        PanelDataset::new(vec![VariableMeta::new("a"), VariableMeta::new("b")], vec![p]).unwrap()
    }

    #[test]
    fn uses_last_rows_in_window() {
        let data = panel();
        let mask = build_mask(&data);
        let imputed = ImputerSpec::mean().impute(&data).unwrap();
        let f = extract_baseline_features(&imputed, &mask, &FeatureConfig::default(), None).unwrap();
        assert_eq!(f[0].len(), 8);
        let mean_b = (10.0 + 30.0 + 40.0) / 3.0;
        let mean_a = (1.0 + 2.0 + 4.0) / 3.0;
        assert_eq!(f[0], vec![2.0, mean_b, 1.0, 0.0, mean_a, 30.0, 0.0, 1.0]);
    }

    #[test]
    fn statics_are_appended() {
        let data = panel();
        let imputed = ImputerSpec::mean().impute(&data).unwrap();
        let statics = vec![vec![65.0, 1.0]];
        let f = extract_baseline_features(&imputed, &build_mask(&data), &FeatureConfig::default(), Some(&statics))
            .unwrap();
        assert_eq!(f[0].len(), 10);
        assert_eq!(&f[0][8..], &[65.0, 1.0]);
    }

    #[test]
    fn too_few_rows() {
        let data = panel();
        let imputed = ImputerSpec::mean().impute(&data).unwrap();
        let cfg = FeatureConfig {
            window_hours: 10.0,
            n_obs: 2,
        };
        assert!(matches!(
            extract_baseline_features(&imputed, &build_mask(&data), &cfg, None),
            Err(Error::InsufficientObservations(_))
        ));
    }
}
