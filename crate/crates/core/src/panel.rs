//! Panel data model: ragged per-patient observation matrices, the observed
//! mask, and the merge rule that keeps observed cells untouched.
//!
//! Missing cells are stored as `NaN` internally and surfaced as `Option<f64>`.
//! Non-finite values are rejected at construction, so a stored `NaN` can only
//! mean "missing".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub low: f64,
    pub high: f64,
}

impl ValueRange {
    pub fn new(low: f64, high: f64) -> Option<Self> {
        (low.is_finite() && high.is_finite() && low < high).then_some(Self { low, high })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.low && x <= self.high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    #[serde(default)]
    pub valid_range: Option<ValueRange>,
}

impl VariableMeta {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: String::new(),
            valid_range: None,
        }
    }
}

/// One patient's time-stamped observations, `len() × n_vars()` cells.
///
/// Equality treats two missing cells as equal.
#[derive(Debug, Clone)]
pub struct PatientSeries {
    id: String,
    timestamps: Vec<f64>,
    values: Vec<f64>,
    n_vars: usize,
}

impl PartialEq for PatientSeries {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.n_vars == other.n_vars
            && self.timestamps == other.timestamps
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

impl PatientSeries {
    pub fn new(
        id: impl Into<String>,
        timestamps: Vec<f64>,
        rows: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let id = id.into();
        let n_vars = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_vars) {
            return Err(Error::InvalidPatient {
                id,
                reason: "rows have differing lengths".into(),
            });
        }
        let values = rows
            .into_iter()
            .flatten()
            .map(|v| v.unwrap_or(f64::NAN))
            .collect();
        Self::from_raw(id, timestamps, values, n_vars)
    }

    /// Builds a series from a row-major buffer where `NaN` marks a missing cell.
    pub fn from_raw(
        id: impl Into<String>,
        timestamps: Vec<f64>,
        values: Vec<f64>,
        n_vars: usize,
    ) -> Result<Self> {
        let id = id.into();
        if values.len() != timestamps.len() * n_vars {
            return Err(Error::InvalidPatient {
                id,
                reason: format!(
                    "{} values for {} rows of {} variables",
                    values.len(),
                    timestamps.len(),
                    n_vars
                ),
            });
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::InvalidPatient {
                id,
                reason: "infinite value".into(),
            });
        }
        for (row, w) in timestamps.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(Error::NonMonotoneTimestamps { id, row: row + 1 });
            }
        }
        if let Some(row) = timestamps.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonMonotoneTimestamps { id, row });
        }
        Ok(Self {
            id,
            timestamps,
            values,
            n_vars,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn get(&self, t: usize, d: usize) -> Option<f64> {
        let v = self.values[t * self.n_vars + d];
        (!v.is_nan()).then_some(v)
    }

    pub fn is_observed(&self, t: usize, d: usize) -> bool {
        !self.values[t * self.n_vars + d].is_nan()
    }

    pub fn row(&self, t: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        self.raw_row(t).iter().map(|v| (!v.is_nan()).then_some(*v))
    }

    /// Row view with `NaN` for missing cells.
    pub fn raw_row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_vars..(t + 1) * self.n_vars]
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn set(&mut self, t: usize, d: usize, v: Option<f64>) {
        self.values[t * self.n_vars + d] = v.unwrap_or(f64::NAN);
    }

    /// Copy of this series keeping only rows selected by `keep`.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize) -> bool) -> PatientSeries {
        let mut timestamps = Vec::new();
        let mut values = Vec::new();
        for t in 0..self.len() {
            if keep(t) {
                timestamps.push(self.timestamps[t]);
                values.extend_from_slice(self.raw_row(t));
            }
        }
        PatientSeries {
            id: self.id.clone(),
            timestamps,
            values,
            n_vars: self.n_vars,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    variables: Vec<VariableMeta>,
    patients: Vec<PatientSeries>,
}

impl PanelDataset {
    pub fn new(variables: Vec<VariableMeta>, patients: Vec<PatientSeries>) -> Result<Self> {
        for v in &variables {
            if let Some(r) = v.valid_range {
                if !(r.low < r.high) {
                    return Err(Error::InvalidRange {
                        name: v.name.clone(),
                        low: r.low,
                        high: r.high,
                    });
                }
            }
        }
        let d = variables.len();
        for p in &patients {
            if p.n_vars != d && !p.is_empty() {
                return Err(Error::ShapeMismatch(format!(
                    "patient {} has {} variables, panel declares {}",
                    p.id, p.n_vars, d
                )));
            }
            if p.is_empty() {
                return Err(Error::InvalidPatient {
                    id: p.id.clone(),
                    reason: "no observation rows".into(),
                });
            }
        }
        Ok(Self {
            variables,
            patients,
        })
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn variable_names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn patients(&self) -> &[PatientSeries] {
        &self.patients
    }

    pub fn patient(&self, i: usize) -> &PatientSeries {
        &self.patients[i]
    }

    pub fn n_patients(&self) -> usize {
        self.patients.len()
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn t_max(&self) -> usize {
        self.patients.iter().map(PatientSeries::len).max().unwrap_or(0)
    }

    /// Total number of observation rows across patients.
    pub fn n_rows(&self) -> usize {
        self.patients.iter().map(PatientSeries::len).sum()
    }

    pub fn get(&self, i: usize, t: usize, d: usize) -> Option<f64> {
        self.patients[i].get(t, d)
    }

    pub fn same_shape(&self, other: &PanelDataset) -> bool {
        self.n_vars() == other.n_vars()
            && self.patients.len() == other.patients.len()
            && self
                .patients
                .iter()
                .zip(&other.patients)
                .all(|(a, b)| a.len() == b.len())
    }

    pub fn is_complete(&self) -> bool {
        self.patients
            .iter()
            .all(|p| p.values.iter().all(|v| !v.is_nan()))
    }

    pub fn count_missing(&self) -> usize {
        self.patients
            .iter()
            .map(|p| p.values.iter().filter(|v| v.is_nan()).count())
            .sum()
    }

    /// Panel restricted to the patients at `indices`, in that order.
    pub fn select_patients(&self, indices: &[usize]) -> PanelDataset {
        PanelDataset {
            variables: self.variables.clone(),
            patients: indices.iter().map(|&i| self.patients[i].clone()).collect(),
        }
    }

    /// Replaces the patient list; the result keeps this panel's variables.
    pub fn with_patients(&self, patients: Vec<PatientSeries>) -> Result<PanelDataset> {
        PanelDataset::new(self.variables.clone(), patients)
    }

    pub(crate) fn patients_mut(&mut self) -> &mut [PatientSeries] {
        &mut self.patients
    }
}

/// Binary observed indicator aligned with a [`PanelDataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMatrix {
    n_vars: usize,
    patients: Vec<Vec<bool>>,
}

impl MaskMatrix {
    pub fn from_rows(n_vars: usize, patients: Vec<Vec<bool>>) -> Result<Self> {
        if n_vars > 0 && patients.iter().any(|p| p.len() % n_vars != 0) {
            return Err(Error::ShapeMismatch(
                "mask rows are not a multiple of the variable count".into(),
            ));
        }
        Ok(Self { n_vars, patients })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_patients(&self) -> usize {
        self.patients.len()
    }

    pub fn n_rows(&self, i: usize) -> usize {
        if self.n_vars == 0 {
            0
        } else {
            self.patients[i].len() / self.n_vars
        }
    }

    pub fn get(&self, i: usize, t: usize, d: usize) -> bool {
        self.patients[i][t * self.n_vars + d]
    }

    pub fn row(&self, i: usize, t: usize) -> &[bool] {
        &self.patients[i][t * self.n_vars..(t + 1) * self.n_vars]
    }

    pub fn patient(&self, i: usize) -> &[bool] {
        &self.patients[i]
    }

    pub(crate) fn set(&mut self, i: usize, t: usize, d: usize, v: bool) {
        self.patients[i][t * self.n_vars + d] = v;
    }

    pub fn observed_count(&self) -> usize {
        self.patients.iter().flatten().filter(|&&b| b).count()
    }

    pub fn matches(&self, data: &PanelDataset) -> bool {
        self.n_vars == data.n_vars()
            && self.patients.len() == data.n_patients()
            && self
                .patients
                .iter()
                .zip(data.patients())
                .all(|(m, p)| m.len() == p.len() * self.n_vars)
    }

    pub fn select_patients(&self, indices: &[usize]) -> MaskMatrix {
        MaskMatrix {
            n_vars: self.n_vars,
            patients: indices.iter().map(|&i| self.patients[i].clone()).collect(),
        }
    }
}

/// Which engine produced a cell of an [`ImputationResult`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", content = "weight", rename_all = "snake_case")]
pub enum Provenance {
    Observed,
    ForwardFill,
    Iterative,
    /// Convex combination with the forward-fill weight that was used.
    Fused(f64),
    /// Any other single-engine estimate (mean, median, KNN, SoftImpute).
    Estimate,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Observed => "observed",
            Provenance::ForwardFill => "forward_fill",
            Provenance::Iterative => "iterative",
            Provenance::Fused(_) => "fused",
            Provenance::Estimate => "estimate",
        }
    }

    pub fn weight(&self) -> Option<f64> {
        match self {
            Provenance::Fused(w) => Some(*w),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    pub values: PanelDataset,
    /// Per patient, row-major `t_i × D` tags.
    pub provenance: Vec<Vec<Provenance>>,
}

impl ImputationResult {
    pub fn provenance_at(&self, i: usize, t: usize, d: usize) -> Provenance {
        self.provenance[i][t * self.values.n_vars() + d]
    }
}

pub fn build_mask(data: &PanelDataset) -> MaskMatrix {
    MaskMatrix {
        n_vars: data.n_vars(),
        patients: data
            .patients()
            .iter()
            .map(|p| p.values.iter().map(|v| !v.is_nan()).collect())
            .collect(),
    }
}

/// Keeps observed cells of `data` and fills every unobserved cell from
/// `estimate`, tagging the filled cells as [`Provenance::Estimate`].
pub fn merge_imputed(
    data: &PanelDataset,
    mask: &MaskMatrix,
    estimate: &PanelDataset,
) -> Result<ImputationResult> {
    merge_with(data, mask, estimate, |_, _, _| Provenance::Estimate)
}

pub(crate) fn merge_with(
    data: &PanelDataset,
    mask: &MaskMatrix,
    estimate: &PanelDataset,
    mut tag: impl FnMut(usize, usize, usize) -> Provenance,
) -> Result<ImputationResult> {
    if !data.same_shape(estimate) {
        return Err(Error::ShapeMismatch("estimate differs from data".into()));
    }
    if !mask.matches(data) {
        return Err(Error::ShapeMismatch("mask differs from data".into()));
    }
    let d_count = data.n_vars();
    let mut out = data.clone();
    let mut provenance = Vec::with_capacity(data.n_patients());
    for (i, patient) in out.patients_mut().iter_mut().enumerate() {
        let est = estimate.patient(i);
        let mut tags = Vec::with_capacity(patient.len() * d_count);
        for t in 0..patient.len() {
            for d in 0..d_count {
                let observed = mask.get(i, t, d);
                if observed != patient.is_observed(t, d) {
                    return Err(Error::MaskInconsistent {
                        patient: i,
                        row: t,
                        variable: d,
                    });
                }
                if observed {
                    tags.push(Provenance::Observed);
                } else {
                    let v = est.get(t, d).ok_or(Error::IncompleteEstimate {
                        patient: i,
                        row: t,
                        variable: d,
                    })?;
                    patient.set(t, d, Some(v));
                    tags.push(tag(i, t, d));
                }
            }
        }
        provenance.push(tags);
    }
    Ok(ImputationResult {
        values: out,
        provenance,
    })
}
