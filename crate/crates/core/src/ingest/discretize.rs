use std::collections::{BTreeMap, HashMap};

use super::LongRecord;
use crate::error::{Error, Result};
use crate::panel::{PanelDataset, PatientSeries, VariableMeta};

/// Discretised panel plus the number of raw records averaged into each cell.
#[derive(Debug, Clone)]
pub struct Discretized {
    pub panel: PanelDataset,
    /// Per patient, row-major `t_i × D` record counts (0 for missing cells).
    pub multiplicity: Vec<Vec<u32>>,
}

pub fn discretize(
    records: &[LongRecord],
    variables: &[VariableMeta],
    grid_hours: f64,
) -> Result<PanelDataset> {
    discretize_counted(records, variables, grid_hours).map(|d| d.panel)
}

/// Bins each patient's records onto a grid of `grid_hours`, labelling each
/// bin by its start time and averaging repeated measurements of a variable
/// inside one bin. Patients keep their order of first appearance; bins with
/// no records are omitted.
pub fn discretize_counted(
    records: &[LongRecord],
    variables: &[VariableMeta],
    grid_hours: f64,
) -> Result<Discretized> {
    if !(grid_hours > 0.0 && grid_hours.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "grid_hours must be positive, got {grid_hours}"
        )));
    }
    let var_index: HashMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let n_vars = variables.len();

    let mut order: Vec<&str> = Vec::new();
    // patient -> bin index -> per-variable (sum, count)
    let mut bins: HashMap<&str, BTreeMap<i64, Vec<(f64, u32)>>> = HashMap::new();
    for (k, r) in records.iter().enumerate() {
        let d = *var_index
            .get(r.variable.as_str())
            .ok_or_else(|| Error::UnknownVariable {
                line: k as u64 + 2,
                name: r.variable.clone(),
            })?;
        let bin = (r.time / grid_hours).floor() as i64;
        let patient = bins.entry(r.patient_id.as_str()).or_insert_with(|| {
            order.push(r.patient_id.as_str());
            BTreeMap::new()
        });
        let cell = &mut patient.entry(bin).or_insert_with(|| vec![(0.0, 0); n_vars])[d];
        cell.0 += r.value;
        cell.1 += 1;
    }
    if order.is_empty() {
        return Err(Error::EmptyCohort);
    }

    let mut patients = Vec::with_capacity(order.len());
    let mut multiplicity = Vec::with_capacity(order.len());
    for id in order {
        let rows = &bins[id];
        let mut timestamps = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len() * n_vars);
        let mut counts = Vec::with_capacity(rows.len() * n_vars);
        for (&bin, cells) in rows {
            timestamps.push(bin as f64 * grid_hours);
            for &(sum, n) in cells {
                values.push(if n == 0 { f64::NAN } else { sum / f64::from(n) });
                counts.push(n);
            }
        }
        patients.push(PatientSeries::from_raw(id, timestamps, values, n_vars)?);
        multiplicity.push(counts);
    }
    Ok(Discretized {
        panel: PanelDataset::new(variables.to_vec(), patients)?,
        multiplicity,
    })
}
