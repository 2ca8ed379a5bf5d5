use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{PanelDataset, VariableMeta};

/// One raw measurement: `patient_id,time,variable,value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRecord {
    pub patient_id: String,
    pub time: f64,
    pub variable: String,
    pub value: f64,
}

const HEADER: [&str; 4] = ["patient_id", "time", "variable", "value"];

/// Parses a long-format CSV file. Rows naming a variable outside `schema`
/// are rejected; pass `None` to accept any variable.
pub fn parse_long_csv(path: impl AsRef<Path>, schema: Option<&[VariableMeta]>) -> Result<Vec<LongRecord>> {
    let file = std::fs::File::open(path)?;
    read_long_records(file, schema)
}

pub fn read_long_records<R: Read>(reader: R, schema: Option<&[VariableMeta]>) -> Result<Vec<LongRecord>> {
    let known: Option<HashSet<&str>> = schema.map(|s| s.iter().map(|v| v.name.as_str()).collect());
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut saw_header = false;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if !saw_header {
            saw_header = true;
            let fields: Vec<&str> = row.iter().collect();
            if fields != HEADER {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("expected header `{}`", HEADER.join(",")),
                });
            }
            continue;
        }
        if row.len() != 4 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 4 fields, found {}", row.len()),
            });
        }
        let time: f64 = row[1].parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("bad time `{}`", &row[1]),
        })?;
        if !time.is_finite() || time < 0.0 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("time must be finite and non-negative, got {time}"),
            });
        }
        let variable = row[2].to_string();
        if let Some(known) = &known {
            if !known.contains(variable.as_str()) {
                return Err(Error::UnknownVariable { line, name: variable });
            }
        }
        let value: f64 = row[3].parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("bad value `{}`", &row[3]),
        })?;
        if !value.is_finite() {
            return Err(Error::NonFiniteValue { line });
        }
        out.push(LongRecord {
            patient_id: row[0].to_string(),
            time,
            variable,
            value,
        });
    }
    Ok(out)
}

/// Variable list in order of first appearance.
pub fn infer_variables(records: &[LongRecord]) -> Vec<VariableMeta> {
    let mut seen = HashSet::new();
    records
        .iter()
        .filter(|r| seen.insert(r.variable.as_str()))
        .map(|r| VariableMeta::new(r.variable.clone()))
        .collect()
}

/// Writes the observed cells of `data` in long format, one row per cell,
/// ordered by patient, time, then variable.
pub fn write_long_csv<W: Write>(data: &PanelDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    let names = data.variable_names();
    for p in data.patients() {
        for (t, &time) in p.timestamps().iter().enumerate() {
            for (d, v) in p.row(t).enumerate() {
                if let Some(v) = v {
                    w.write_record([p.id(), &time.to_string(), names[d], &v.to_string()])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
