use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{build_mask, MaskMatrix, PanelDataset, PatientSeries, VariableMeta};
use crate::seed;

/// Parameters of the synthetic EMR-like panel.
///
/// Each variable is `location + scale · x` where `x` mixes a per-patient
/// shared AR(1) factor with an idiosyncratic AR(1) series, both stationary
/// with unit variance and lag-one autocorrelation `temporal_corr`. Any two
/// variables then have correlation `cross_corr` (sign alternates between
/// neighbours when `cross_corr < 0`). Rows are one hour apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_patients: usize,
    pub n_timepoints: usize,
    pub n_variables: usize,
    pub temporal_corr: f64,
    pub cross_corr: f64,
    /// Missing probability per variable; a single entry applies to all.
    pub missing_profile: Vec<f64>,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_patients == 0 || self.n_timepoints == 0 || self.n_variables == 0 {
            return bad("synthetic counts must be at least 1");
        }
        if !(0.0..1.0).contains(&self.temporal_corr) {
            return bad("temporal_corr must lie in [0, 1)");
        }
        if !(-1.0..=1.0).contains(&self.cross_corr) {
            return bad("cross_corr must lie in [-1, 1]");
        }
        if self.missing_profile.len() != 1 && self.missing_profile.len() != self.n_variables {
            return bad("missing_profile needs one entry or one per variable");
        }
        if self.missing_profile.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("missing probabilities must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn missing_prob(&self, d: usize) -> f64 {
        if self.missing_profile.len() == 1 {
            self.missing_profile[0]
        } else {
            self.missing_profile[d]
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub truth: PanelDataset,
    pub observed: PanelDataset,
    pub mask: MaskMatrix,
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticPanel> {
    cfg.validate()?;
    let (n_t, n_d) = (cfg.n_timepoints, cfg.n_variables);
    let phi = cfg.temporal_corr;
    let innov = (1.0 - phi * phi).sqrt();
    let c = cfg.cross_corr.abs();
    let (load_shared, load_own) = (c.sqrt(), (1.0 - c).sqrt());
    let sign = |d: usize| if cfg.cross_corr < 0.0 && d % 2 == 1 { -1.0 } else { 1.0 };

    let mut values_rng = seed::rng(cfg.seed, "synthetic/values");
    let mut missing_rng = seed::rng(cfg.seed, "synthetic/missing");
    let variables: Vec<VariableMeta> = (0..n_d)
        .map(|d| VariableMeta {
            name: format!("v{d}"),
            unit: "au".into(),
            valid_range: None,
        })
        .collect();
    let timestamps: Vec<f64> = (0..n_t).map(|t| t as f64).collect();
    let id_width = (cfg.n_patients as f64).log10().floor() as usize + 1;

    let mut truth = Vec::with_capacity(cfg.n_patients);
    let mut observed = Vec::with_capacity(cfg.n_patients);
    for i in 0..cfg.n_patients {
        let mut normal = || -> f64 { StandardNormal.sample(&mut values_rng) };
        let mut shared: f64 = normal();
        let mut own: Vec<f64> = (0..n_d).map(|_| normal()).collect();
        let mut vals = Vec::with_capacity(n_t * n_d);
        for t in 0..n_t {
            if t > 0 {
                shared = phi * shared + innov * normal();
                for e in own.iter_mut() {
                    *e = phi * *e + innov * normal();
                }
            }
            for (d, e) in own.iter().enumerate() {
                let x = sign(d) * load_shared * shared + load_own * e;
                vals.push(location(d) + scale(d) * x);
            }
        }
        let masked: Vec<f64> = vals
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if missing_rng.random::<f64>() < cfg.missing_prob(k % n_d) {
                    f64::NAN
                } else {
                    v
                }
            })
            .collect();
        let id = format!("p{i:0id_width$}");
        truth.push(PatientSeries::from_raw(id.clone(), timestamps.clone(), vals, n_d)?);
        observed.push(PatientSeries::from_raw(id, timestamps.clone(), masked, n_d)?);
    }
    let truth = PanelDataset::new(variables.clone(), truth)?;
    let observed = PanelDataset::new(variables, observed)?;
    let mask = build_mask(&observed);
    Ok(SyntheticPanel {
        truth,
        observed,
        mask,
    })
}

fn location(d: usize) -> f64 {
    50.0 + 10.0 * d as f64
}

fn scale(d: usize) -> f64 {
    5.0 + d as f64
}
