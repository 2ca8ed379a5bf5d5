use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::impute::{ImputerKind, ImputerSpec};
use crate::panel::{ImputationResult, MaskMatrix, PanelDataset};
use crate::tdi::{tdi_impute_with_frequencies, TdiSpec};

/// Either a baseline engine or the time-dependent fusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Imputer(ImputerSpec),
    Tdi(TdiSpec),
}

impl MethodSpec {
    pub fn is_forward_fill(&self) -> bool {
        matches!(
            self,
            MethodSpec::Imputer(ImputerSpec {
                kind: ImputerKind::ForwardFill,
                ..
            })
        )
    }

    pub fn requires_standardization(&self) -> bool {
        match self {
            MethodSpec::Imputer(s) => s.requires_standardization(),
            MethodSpec::Tdi(_) => false,
        }
    }

    /// Estimate of every cell; may be incomplete for forward filling.
    pub fn estimate(&self, data: &PanelDataset, mask: &MaskMatrix) -> Result<PanelDataset> {
        match self {
            MethodSpec::Imputer(s) => s.estimate(data),
            MethodSpec::Tdi(s) => Ok(tdi_impute_with_frequencies(data, mask, s, None)?.values),
        }
    }

    /// Complete imputation. `frequencies` overrides the measurement
    /// frequencies used by TDI and is ignored by the other engines.
    pub fn impute(
        &self,
        data: &PanelDataset,
        mask: &MaskMatrix,
        frequencies: Option<&[f64]>,
    ) -> Result<ImputationResult> {
        match self {
            MethodSpec::Imputer(s) => s.impute(data),
            MethodSpec::Tdi(s) => tdi_impute_with_frequencies(data, mask, s, frequencies),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMethod {
    pub name: String,
    pub spec: MethodSpec,
}

impl NamedMethod {
    pub fn new(name: impl Into<String>, spec: MethodSpec) -> Self {
        Self {
            name: name.into(),
            spec,
        }
    }

    pub fn imputer(name: impl Into<String>, spec: ImputerSpec) -> Self {
        Self::new(name, MethodSpec::Imputer(spec))
    }

    pub fn tdi(name: impl Into<String>, spec: TdiSpec) -> Self {
        Self::new(name, MethodSpec::Tdi(spec))
    }
}
