//! Baseline outcome prediction from imputed panels: fixed-length features,
//! a native logistic regression, fold-separated imputation and ranking
//! metrics.

mod cohort;
mod cv;
mod features;
mod logistic;
mod metrics;
mod synthetic;

pub use cohort::{
    build_cohort, parse_labels_csv, parse_statics_csv, CohortFilter, FilterSummary, LabelRecord, StaticTable,
    TaskCohort,
};
pub use cv::{
    assign_folds, cross_validate, cross_validate_features, cross_validate_with, shuffle_labels, CvConfig, CvReport,
    FoldResult, Summary, TaskConfig,
};
pub use features::{extract_baseline_features, FeatureConfig};
pub use logistic::{fit_logistic, sigmoid, Classifier, LogisticModel, LogisticParams};
pub use metrics::{aupr, auroc};
pub use synthetic::{generate_synthetic_cohort, SyntheticCohort, SyntheticCohortConfig};
