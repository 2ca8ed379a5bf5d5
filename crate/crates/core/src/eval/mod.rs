//! Masking benchmarks and imputation error metrics.

mod masking;
mod metrics;
mod report;

pub use masking::{
    mask_random, masked_count, missing_rate_after_ffill, run_ffill_subset_benchmark,
    run_masking_benchmark, MaskedCell, MaskingPlan,
};
pub use metrics::{nrmse, rmse, smape};
pub use report::{write_rows_csv, MaskingReport, MetricRow, OVERALL};
