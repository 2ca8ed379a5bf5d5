use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::method::NamedMethod;

/// Variable label of the per-method summary row.
pub const OVERALL: &str = "__overall__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub imputer: String,
    pub variable: String,
    pub n_cells: usize,
    pub rmse: f64,
    pub nrmse: f64,
    pub smape: f64,
}

/// Outcome of one masking experiment. The `__overall__` row of each method
/// is the unweighted mean of its per-variable rows; variables with no
/// evaluated cells are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingReport {
    pub variant: String,
    pub seed: u64,
    pub fraction: f64,
    /// Cells hidden by the masking step.
    pub n_masked: usize,
    /// Hidden cells that were scored.
    pub n_cells: usize,
    pub methods: Vec<NamedMethod>,
    pub rows: Vec<MetricRow>,
    /// Same metrics after undoing standardisation, when it was applied.
    pub original_rows: Option<Vec<MetricRow>>,
}

impl MaskingReport {
    pub fn overall(&self, method: &str) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.imputer == method && r.variable == OVERALL)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows_csv(&self.rows, out)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// Wide table: one line per variable, one NRMSE column per method.
    pub fn write_nrmse_by_variable<W: Write>(&self, out: W) -> Result<()> {
        let mut methods: Vec<&str> = Vec::new();
        let mut variables: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !methods.contains(&r.imputer.as_str()) {
                methods.push(&r.imputer);
            }
            if r.variable != OVERALL && !variables.contains(&r.variable.as_str()) {
                variables.push(&r.variable);
            }
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["variable"];
        header.extend(&methods);
        w.write_record(&header)?;
        for v in variables {
            let mut rec = vec![v.to_string()];
            for m in &methods {
                let cell = self
                    .rows
                    .iter()
                    .find(|r| r.imputer == *m && r.variable == v)
                    .map(|r| r.nrmse.to_string())
                    .unwrap_or_default();
                rec.push(cell);
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// CSV with header `imputer,variable,rmse,nrmse,smape`.
pub fn write_rows_csv<W: Write>(rows: &[MetricRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["imputer", "variable", "rmse", "nrmse", "smape"])?;
    for r in rows {
        w.write_record([
            r.imputer.clone(),
            r.variable.clone(),
            r.rmse.to_string(),
            r.nrmse.to_string(),
            r.smape.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
