//! Raw long-format records to a clean [`PanelDataset`](crate::panel::PanelDataset),
//! plus a seeded synthetic panel generator.

mod discretize;
mod long_csv;
mod outliers;
mod standardize;
mod synthetic;

pub use discretize::{discretize, discretize_counted, Discretized};
pub use long_csv::{infer_variables, parse_long_csv, read_long_records, write_long_csv, LongRecord};
pub use outliers::{parse_ranges_csv, remove_outliers, RangeTable};
pub use standardize::{
    apply_standardizer, fit_standardizer, invert_standardizer, StandardizationParams,
};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticPanel};
