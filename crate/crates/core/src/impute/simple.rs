use super::FlatMatrix;
use crate::error::{Error, Result};
use crate::panel::PanelDataset;

pub fn impute_mean(m: &FlatMatrix) -> Result<FlatMatrix> {
    fill_columns(m, |c| m.column_mean(c))
}

/// Median of the observed values; even counts average the two middle values.
pub fn impute_median(m: &FlatMatrix) -> Result<FlatMatrix> {
    fill_columns(m, |c| {
        let mut v: Vec<f64> = m.observed_in_column(c).collect();
        if v.is_empty() {
            return Err(Error::AllMissingColumn(c));
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Ok(if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        })
    })
}

fn fill_columns(m: &FlatMatrix, stat: impl Fn(usize) -> Result<f64>) -> Result<FlatMatrix> {
    let mut out = m.clone();
    for c in 0..m.n_cols() {
        if m.missing_count(c) == 0 {
            continue;
        }
        let fill = stat(c)?;
        for r in 0..m.n_rows() {
            if !m.is_observed(r, c) {
                out.set(r, c, fill);
            }
        }
    }
    Ok(out)
}

/// Last observation carried forward within each patient. Cells with no
/// earlier observation of the same variable stay missing.
pub fn forward_fill(data: &PanelDataset) -> PanelDataset {
    let mut out = data.clone();
    for p in out.patients_mut() {
        for d in 0..p.n_vars() {
            let mut last = None;
            for t in 0..p.len() {
                match p.get(t, d) {
                    Some(v) => last = Some(v),
                    None => {
                        if last.is_some() {
                            p.set(t, d, last);
                        }
                    }
                }
            }
        }
    }
    out
}
