//! Baseline imputation engines behind one spec type.
//!
//! Multivariate engines (mean, median, KNN, SoftImpute, iterative) work on the
//! stacked [`FlatMatrix`] and ignore patient boundaries; forward filling works
//! per patient on the panel itself.

mod flat;
mod iterative;
mod knn;
mod ridge;
mod simple;
mod soft;

use serde::{Deserialize, Serialize};

pub use flat::{flatten, unflatten, FlatMatrix, IndexMap};
pub use iterative::{iterative_impute, IterativeOutcome, IterativeParams};
pub use knn::{knn_impute, masked_distance};
pub use ridge::{fit_ridge, RidgeFit};
pub use simple::{forward_fill, impute_mean, impute_median};
pub use soft::{soft_impute, SoftImputeOutcome, SoftImputeParams};

use crate::error::{Error, Result};
use crate::panel::{build_mask, merge_with, ImputationResult, PanelDataset, Provenance};

pub const DEFAULT_KNN_K: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum ImputerKind {
    Mean,
    Median,
    ForwardFill,
    Knn { k: usize },
    SoftImpute(SoftImputeParams),
    Iterative(IterativeParams),
}

/// A configured imputation engine. Serialises to the flat key set
/// `kind, k, lambda, max_rank, max_iter, tol, ridge_alpha, clip, seed`
/// (plus the optional `center` and `sample_posterior` switches).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawImputerSpec", into = "RawImputerSpec")]
pub struct ImputerSpec {
    pub kind: ImputerKind,
    pub seed: u64,
}

impl ImputerSpec {
    pub fn new(kind: ImputerKind) -> Self {
        Self { kind, seed: 0 }
    }

    pub fn mean() -> Self {
        Self::new(ImputerKind::Mean)
    }

    pub fn median() -> Self {
        Self::new(ImputerKind::Median)
    }

    pub fn forward_fill() -> Self {
        Self::new(ImputerKind::ForwardFill)
    }

    pub fn knn(k: usize) -> Self {
        Self::new(ImputerKind::Knn { k })
    }

    pub fn soft_impute(params: SoftImputeParams) -> Self {
        Self::new(ImputerKind::SoftImpute(params))
    }

    pub fn iterative(params: IterativeParams) -> Self {
        Self::new(ImputerKind::Iterative(params))
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ImputerKind::Mean => "mean",
            ImputerKind::Median => "median",
            ImputerKind::ForwardFill => "forward_fill",
            ImputerKind::Knn { .. } => "knn",
            ImputerKind::SoftImpute(_) => "soft_impute",
            ImputerKind::Iterative(_) => "iterative",
        }
    }

    /// Distance- and spectrum-based engines assume comparable column scales.
    pub fn requires_standardization(&self) -> bool {
        matches!(self.kind, ImputerKind::Knn { .. } | ImputerKind::SoftImpute(_))
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ImputerKind::Knn { k } if *k == 0 => {
                Err(Error::InvalidParameter("knn requires k >= 1".into()))
            }
            ImputerKind::SoftImpute(p) => p.validate(),
            ImputerKind::Iterative(p) => p.validate(),
            _ => Ok(()),
        }
    }

    /// Runs the engine and returns its estimate of every cell. Observed cells
    /// are returned unchanged; forward filling may leave cells missing.
    pub fn estimate(&self, data: &PanelDataset) -> Result<PanelDataset> {
        self.validate()?;
        if let ImputerKind::ForwardFill = self.kind {
            return Ok(forward_fill(data));
        }
        let (m, index) = flatten(data);
        let filled = match &self.kind {
            ImputerKind::Mean => impute_mean(&m)?,
            ImputerKind::Median => impute_median(&m)?,
            ImputerKind::Knn { k } => knn_impute(&m, *k)?,
            ImputerKind::SoftImpute(p) => soft_impute(&m, p)?.matrix,
            ImputerKind::Iterative(p) => iterative_impute(&m, p, self.seed)?.matrix,
            ImputerKind::ForwardFill => unreachable!(),
        };
        unflatten(&filled, &index, data)
    }

    /// Completed panel with provenance. Fails with `IncompleteEstimate` when
    /// the engine (forward filling) cannot fill every cell.
    pub fn impute(&self, data: &PanelDataset) -> Result<ImputationResult> {
        let est = self.estimate(data)?;
        let tag = match self.kind {
            ImputerKind::ForwardFill => Provenance::ForwardFill,
            ImputerKind::Iterative(_) => Provenance::Iterative,
            _ => Provenance::Estimate,
        };
        merge_with(data, &build_mask(data), &est, |_, _, _| tag)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct RawImputerSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ridge_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clip: Option<bool>,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_posterior: Option<bool>,
}

impl TryFrom<RawImputerSpec> for ImputerSpec {
    type Error = String;

    fn try_from(raw: RawImputerSpec) -> std::result::Result<Self, String> {
        let unexpected = |key: &str, present: bool| -> std::result::Result<(), String> {
            if present {
                Err(format!("key `{key}` does not apply to kind `{}`", raw.kind))
            } else {
                Ok(())
            }
        };
        let kind = match raw.kind.as_str() {
            "mean" | "median" | "forward_fill" => {
                unexpected("k", raw.k.is_some())?;
                unexpected("lambda", raw.lambda.is_some())?;
                unexpected("max_iter", raw.max_iter.is_some())?;
                match raw.kind.as_str() {
                    "mean" => ImputerKind::Mean,
                    "median" => ImputerKind::Median,
                    _ => ImputerKind::ForwardFill,
                }
            }
            "knn" => ImputerKind::Knn {
                k: raw.k.unwrap_or(DEFAULT_KNN_K),
            },
            "soft_impute" => {
                unexpected("ridge_alpha", raw.ridge_alpha.is_some())?;
                let d = SoftImputeParams::default();
                ImputerKind::SoftImpute(SoftImputeParams {
                    lambda: raw.lambda,
                    max_rank: raw.max_rank,
                    max_iter: raw.max_iter.unwrap_or(d.max_iter),
                    tol: raw.tol.unwrap_or(d.tol),
                    center: raw.center.unwrap_or(d.center),
                })
            }
            "iterative" => {
                unexpected("lambda", raw.lambda.is_some())?;
                let d = IterativeParams::default();
                ImputerKind::Iterative(IterativeParams {
                    max_iter: raw.max_iter.unwrap_or(d.max_iter),
                    tol: raw.tol.unwrap_or(d.tol),
                    ridge_alpha: raw.ridge_alpha.unwrap_or(d.ridge_alpha),
                    clip: raw.clip.unwrap_or(d.clip),
                    sample_posterior: raw.sample_posterior.unwrap_or(d.sample_posterior),
                })
            }
            other => return Err(format!("unknown imputer kind `{other}`")),
        };
        let spec = ImputerSpec { kind, seed: raw.seed };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

impl From<ImputerSpec> for RawImputerSpec {
    fn from(spec: ImputerSpec) -> Self {
        let mut raw = RawImputerSpec {
            kind: spec.kind_name().to_string(),
            seed: spec.seed,
            ..RawImputerSpec::default()
        };
        match spec.kind {
            ImputerKind::Knn { k } => raw.k = Some(k),
            ImputerKind::SoftImpute(p) => {
                raw.lambda = p.lambda;
                raw.max_rank = p.max_rank;
                raw.max_iter = Some(p.max_iter);
                raw.tol = Some(p.tol);
                raw.center = Some(p.center);
            }
            ImputerKind::Iterative(p) => {
                raw.max_iter = Some(p.max_iter);
                raw.tol = Some(p.tol);
                raw.ridge_alpha = Some(p.ridge_alpha);
                raw.clip = Some(p.clip);
                raw.sample_posterior = Some(p.sample_posterior);
            }
            _ => {}
        }
        raw
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_from_flat_keys() {
        let spec: ImputerSpec =
            serde_json::from_str(r#"{"kind":"iterative","max_iter":5,"ridge_alpha":0.1,"clip":false,"seed":3}"#)
                .unwrap();
        assert_eq!(spec.seed, 3);
        match spec.kind {
            ImputerKind::Iterative(p) => {
                assert_eq!(p.max_iter, 5);
                assert_eq!(p.ridge_alpha, 0.1);
                assert!(!p.clip);
            }
            _ => panic!("wrong kind"),
        }
        let knn: ImputerSpec = serde_json::from_str(r#"{"kind":"knn"}"#).unwrap();
        assert_eq!(knn.kind, ImputerKind::Knn { k: DEFAULT_KNN_K });
    }

    #[test]
    fn spec_round_trips() {
        let spec = ImputerSpec::soft_impute(SoftImputeParams {
            lambda: Some(0.5),
            max_rank: Some(3),
            ..SoftImputeParams::default()
        });
        let back: ImputerSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn spec_rejects_invalid() {
        assert!(serde_json::from_str::<ImputerSpec>(r#"{"kind":"knn","k":0}"#).is_err());
        assert!(serde_json::from_str::<ImputerSpec>(r#"{"kind":"forest"}"#).is_err());
        assert!(serde_json::from_str::<ImputerSpec>(r#"{"kind":"mean","k":3}"#).is_err());
        assert!(serde_json::from_str::<ImputerSpec>(r#"{"kind":"iterative","tol":0}"#).is_err());
    }
}
