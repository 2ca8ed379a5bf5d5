//! Imputation for irregular clinical panel time series.
//!
//! The central method ([`tdi`]) blends forward filling with a round-robin
//! regression imputer, cell by cell, using how recently and how often each
//! variable is measured. Around it sit the baseline engines ([`impute`]),
//! long-format ingestion ([`ingest`]), masking benchmarks ([`eval`]) and a
//! downstream prediction harness ([`predict`]).
//!
//! Missing cells are `None` at the API boundary. Every random choice is
//! driven by an explicit `u64` seed, split per component with [`seed::derive`].

pub mod error;
pub mod eval;
pub mod impute;
pub mod ingest;
mod linalg;
pub mod method;
pub mod panel;
pub mod predict;
pub mod seed;
pub mod tdi;

pub use error::{Error, ErrorClass, Result};
pub use eval::{MaskingReport, MetricRow};
pub use impute::{ImputerKind, ImputerSpec, IterativeParams, SoftImputeParams};
pub use ingest::{StandardizationParams, SyntheticConfig};
pub use method::{MethodSpec, NamedMethod};
pub use panel::{
    build_mask, ImputationResult, MaskMatrix, PanelDataset, PatientSeries, Provenance, ValueRange, VariableMeta,
};
pub use predict::{CvConfig, CvReport, TaskConfig};
pub use tdi::{tdi_impute, TdiSpec, WeightConfig, WeightFamily};
