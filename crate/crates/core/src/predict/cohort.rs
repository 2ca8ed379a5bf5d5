use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;

/// Outcome of one patient. `event_hours` is the time of the outcome event
/// (e.g. death) when it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub patient_id: String,
    pub label: bool,
    pub event_hours: Option<f64>,
}

/// Numeric per-patient covariates that do not vary over time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StaticTable {
    pub names: Vec<String>,
    pub values: HashMap<String, Vec<f64>>,
}

impl StaticTable {
    /// Rows in the order of `ids`; every id must be present.
    pub fn align<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Vec<Vec<f64>>> {
        ids.into_iter()
            .map(|id| {
                self.values.get(id).cloned().ok_or_else(|| Error::InvalidPatient {
                    id: id.to_string(),
                    reason: "no static covariates".into(),
                })
            })
            .collect()
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn malformed(line: u64, reason: impl Into<String>) -> Error {
    Error::MalformedRow {
        line,
        reason: reason.into(),
    }
}

/// Reads `patient_id,label[,event_hours]` with labels coded 0/1.
pub fn parse_labels_csv<R: Read>(r: R) -> Result<Vec<LabelRecord>> {
    let mut out = Vec::new();
    let mut with_event = None;
    for row in reader(r).records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let Some(has_event) = with_event else {
            let header: Vec<&str> = row.iter().collect();
            with_event = Some(match header.as_slice() {
                ["patient_id", "label"] => false,
                ["patient_id", "label", "event_hours"] => true,
                _ => return Err(malformed(line, "expected header `patient_id,label[,event_hours]`")),
            });
            continue;
        };
        let expected = if has_event { 3 } else { 2 };
        if row.len() != expected {
            return Err(malformed(line, format!("expected {expected} fields, found {}", row.len())));
        }
        let label = match &row[1] {
            "0" => false,
            "1" => true,
            other => return Err(malformed(line, format!("label must be 0 or 1, got `{other}`"))),
        };
        let event_hours = if has_event && !row[2].is_empty() {
            let v: f64 = row[2]
                .parse()
                .map_err(|_| malformed(line, format!("bad event_hours `{}`", &row[2])))?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { line });
            }
            Some(v)
        } else {
            None
        };
        out.push(LabelRecord {
            patient_id: row[0].to_string(),
            label,
            event_hours,
        });
    }
    Ok(out)
}

/// Reads `patient_id,<name>,<name>,...` with numeric cells.
pub fn parse_statics_csv<R: Read>(r: R) -> Result<StaticTable> {
    let mut table = StaticTable::default();
    let mut header_seen = false;
    for row in reader(r).records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if !header_seen {
            header_seen = true;
            if row.get(0) != Some("patient_id") {
                return Err(malformed(line, "first column must be `patient_id`"));
            }
            table.names = row.iter().skip(1).map(str::to_string).collect();
            continue;
        }
        if row.len() != table.names.len() + 1 {
            return Err(malformed(line, format!("expected {} fields", table.names.len() + 1)));
        }
        let values = row
            .iter()
            .skip(1)
            .map(|c| {
                let v: f64 = c.parse().map_err(|_| malformed(line, format!("bad number `{c}`")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteValue { line })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if table.values.insert(row[0].to_string(), values).is_some() {
            return Err(malformed(line, format!("duplicate patient `{}`", &row[0])));
        }
    }
    Ok(table)
}

/// Inclusion rules for the baseline prediction task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortFilter {
    /// Keep rows with `time < window_hours`.
    pub window_hours: f64,
    /// Drop rows without a single observed variable.
    pub drop_empty_rows: bool,
    /// Minimum rows left after windowing.
    pub min_time_points: usize,
    /// Exclude patients whose event happened before this many hours.
    pub min_event_hours: Option<f64>,
}

impl Default for CohortFilter {
    fn default() -> Self {
        Self {
            window_hours: 48.0,
            drop_empty_rows: true,
            min_time_points: 3,
            min_event_hours: None,
        }
    }
}

/// Windowed panel with labels (and optional statics) aligned to patients.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCohort {
    pub panel: PanelDataset,
    pub labels: Vec<bool>,
    pub statics: Option<Vec<Vec<f64>>>,
    pub static_names: Vec<String>,
}

impl TaskCohort {
    pub fn select(&self, indices: &[usize]) -> TaskCohort {
        TaskCohort {
            panel: self.panel.select_patients(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            statics: self
                .statics
                .as_ref()
                .map(|s| indices.iter().map(|&i| s[i].clone()).collect()),
            static_names: self.static_names.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub input: usize,
    pub unlabeled: usize,
    pub early_event: usize,
    pub too_few_points: usize,
    pub kept: usize,
}

pub fn build_cohort(
    data: &PanelDataset,
    labels: &[LabelRecord],
    statics: Option<&StaticTable>,
    filter: &CohortFilter,
) -> Result<(TaskCohort, FilterSummary)> {
    if !(filter.window_hours > 0.0) {
        return Err(Error::InvalidParameter("window_hours must be positive".into()));
    }
    let by_id: HashMap<&str, &LabelRecord> = labels.iter().map(|l| (l.patient_id.as_str(), l)).collect();
    let mut summary = FilterSummary {
        input: data.n_patients(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    let mut kept_labels = Vec::new();
    for p in data.patients() {
        let Some(rec) = by_id.get(p.id()) else {
            summary.unlabeled += 1;
            continue;
        };
        if let (Some(min), Some(at)) = (filter.min_event_hours, rec.event_hours) {
            if at < min {
                summary.early_event += 1;
                continue;
            }
        }
        let ts = p.timestamps();
        let windowed = p.filter_rows(|t| {
            ts[t] < filter.window_hours && !(filter.drop_empty_rows && p.row(t).all(|v| v.is_none()))
        });
        if windowed.len() < filter.min_time_points.max(1) {
            summary.too_few_points += 1;
            continue;
        }
        kept.push(windowed);
        kept_labels.push(rec.label);
    }
    if kept.is_empty() {
        return Err(Error::EmptyCohort);
    }
    summary.kept = kept.len();
    let panel = data.with_patients(kept)?;
    let aligned = statics
        .map(|s| s.align(panel.patients().iter().map(|p| p.id())))
        .transpose()?;
    Ok((
        TaskCohort {
            panel,
            labels: kept_labels,
            statics: aligned,
            static_names: statics.map(|s| s.names.clone()).unwrap_or_default(),
        },
        summary,
    ))
}
