use std::collections::HashMap;
use std::io::Read;

use super::LongRecord;
use crate::error::{Error, Result};
use crate::panel::ValueRange;

/// Plausible value bounds per variable name. Variables without an entry
/// are not filtered.
pub type RangeTable = HashMap<String, ValueRange>;

/// Drops records outside their variable's inclusive range and reports how
/// many were dropped.
pub fn remove_outliers(records: Vec<LongRecord>, ranges: &RangeTable) -> (Vec<LongRecord>, usize) {
    let before = records.len();
    let kept: Vec<_> = records
        .into_iter()
        .filter(|r| ranges.get(&r.variable).is_none_or(|rg| rg.contains(r.value)))
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// Reads a `variable,low,high` table.
pub fn parse_ranges_csv<R: Read>(reader: R) -> Result<RangeTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["variable", "low", "high"] {
        return Err(Error::MalformedRow {
            line: 1,
            reason: "expected header `variable,low,high`".into(),
        });
    }
    let mut out = RangeTable::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("bad bound `{s}`"),
            })
        };
        if row.len() != 3 {
            return Err(Error::MalformedRow {
                line,
                reason: "expected 3 fields".into(),
            });
        }
        let (low, high) = (num(&row[1])?, num(&row[2])?);
        let range = ValueRange::new(low, high).ok_or_else(|| Error::InvalidRange {
            name: row[0].to_string(),
            low,
            high,
        })?;
        out.insert(row[0].to_string(), range);
    }
    Ok(out)
}
