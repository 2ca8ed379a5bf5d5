use crate::error::{Error, Result};
use crate::panel::{PanelDataset, PatientSeries};

/// All observation rows of a panel stacked into one `n_rows × n_cols`
/// matrix (patient order, then time order). `NaN` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl FlatMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n_rows}×{n_cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| v.is_infinite()) {
            return Err(Error::InvalidParameter("infinite matrix entry".into()));
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flatten()
            .map(|v| v.unwrap_or(f64::NAN))
            .collect();
        Self::new(rows.len(), n_cols, data)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let v = self.data[r * self.n_cols + c];
        (!v.is_nan()).then_some(v)
    }

    pub fn is_observed(&self, r: usize, c: usize) -> bool {
        !self.data[r * self.n_cols + c].is_nan()
    }

    pub(crate) fn raw(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n_cols + c]
    }

    pub(crate) fn raw_row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub(crate) fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n_cols + c] = v;
    }

    pub fn is_complete(&self) -> bool {
        self.data.iter().all(|v| !v.is_nan())
    }

    pub fn observed_in_column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows).filter_map(move |r| self.get(r, c))
    }

    pub fn missing_count(&self, c: usize) -> usize {
        (0..self.n_rows).filter(|&r| !self.is_observed(r, c)).count()
    }

    /// Observed mean of column `c`.
    pub fn column_mean(&self, c: usize) -> Result<f64> {
        let (s, n) = self
            .observed_in_column(c)
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            Err(Error::AllMissingColumn(c))
        } else {
            Ok(s / n as f64)
        }
    }
}

/// Row `k` of a [`FlatMatrix`] came from `(patient, time index)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    pub rows: Vec<(usize, usize)>,
}

pub fn flatten(data: &PanelDataset) -> (FlatMatrix, IndexMap) {
    let n_cols = data.n_vars();
    let mut values = Vec::with_capacity(data.n_rows() * n_cols);
    let mut rows = Vec::with_capacity(data.n_rows());
    for (i, p) in data.patients().iter().enumerate() {
        values.extend_from_slice(p.raw_values());
        rows.extend((0..p.len()).map(|t| (i, t)));
    }
    (
        FlatMatrix {
            n_rows: rows.len(),
            n_cols,
            data: values,
        },
        IndexMap { rows },
    )
}

/// Writes the rows of `m` back into a panel shaped like `template`.
pub fn unflatten(m: &FlatMatrix, index: &IndexMap, template: &PanelDataset) -> Result<PanelDataset> {
    if m.n_cols != template.n_vars() || m.n_rows != template.n_rows() || index.rows.len() != m.n_rows {
        return Err(Error::ShapeMismatch("flat matrix does not match template panel".into()));
    }
    let n_cols = m.n_cols;
    let mut buffers: Vec<Vec<f64>> = template
        .patients()
        .iter()
        .map(|p| vec![f64::NAN; p.len() * n_cols])
        .collect();
    for (r, &(i, t)) in index.rows.iter().enumerate() {
        let dst = buffers
            .get_mut(i)
            .and_then(|b| b.get_mut(t * n_cols..(t + 1) * n_cols))
            .ok_or_else(|| Error::ShapeMismatch(format!("index row {r} out of range")))?;
        dst.copy_from_slice(m.raw_row(r));
    }
    let patients = template
        .patients()
        .iter()
        .zip(buffers)
        .map(|(p, values)| PatientSeries::from_raw(p.id(), p.timestamps().to_vec(), values, n_cols))
        .collect::<Result<Vec<_>>>()?;
    template.with_patients(patients)
}
