use std::fs::File;

use tdi_core::ingest::{
    discretize, generate_synthetic, infer_variables, parse_long_csv, parse_ranges_csv, remove_outliers,
};
use tdi_core::predict::{
    generate_synthetic_cohort, parse_labels_csv, parse_statics_csv, LabelRecord, StaticTable,
};
use tdi_core::seed;
use tdi_core::{PanelDataset, VariableMeta};

use crate::config::RunConfig;
use crate::error::CliError;

/// Panel plus whatever outcome data the configuration provides.
pub struct Loaded {
    pub panel: PanelDataset,
    pub labels: Option<Vec<LabelRecord>>,
    pub statics: Option<StaticTable>,
    /// Complete panel, only for synthetic runs.
    pub truth: Option<PanelDataset>,
}

pub fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    if cfg.synthetic.is_some() {
        return load_synthetic(cfg);
    }
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("one of [input] or [synthetic] is required".into()))?;

    let schema: Option<Vec<VariableMeta>> = input
        .variables
        .as_ref()
        .map(|names| names.iter().map(VariableMeta::new).collect());
    let mut records = parse_long_csv(cfg.resolve(&input.long_csv), schema.as_deref())?;
    if let Some(path) = &input.ranges {
        let ranges = parse_ranges_csv(File::open(cfg.resolve(path)).map_err(tdi_core::Error::from)?)?;
        let (kept, dropped) = remove_outliers(records, &ranges);
        log::info!("dropped {dropped} out-of-range values");
        records = kept;
    }
    let variables = schema.unwrap_or_else(|| infer_variables(&records));
    let mut panel = discretize(&records, &variables, input.grid_hours)?;
    if let Some(max) = input.max_patients {
        if max == 0 {
            return Err(CliError::Config("max_patients must be at least 1".into()));
        }
        if panel.n_patients() > max {
            let idx = seed::sample_sorted(cfg.seed, "subsample", panel.n_patients(), max);
            panel = panel.select_patients(&idx);
        }
    }
    let labels = input
        .labels
        .as_ref()
        .map(|p| -> Result<_, CliError> {
            Ok(parse_labels_csv(File::open(cfg.resolve(p)).map_err(tdi_core::Error::from)?)?)
        })
        .transpose()?;
    let statics = input
        .statics
        .as_ref()
        .map(|p| -> Result<_, CliError> {
            Ok(parse_statics_csv(File::open(cfg.resolve(p)).map_err(tdi_core::Error::from)?)?)
        })
        .transpose()?;
    Ok(Loaded {
        panel,
        labels,
        statics,
        truth: None,
    })
}

fn load_synthetic(cfg: &RunConfig) -> Result<Loaded, CliError> {
    if let Some(cohort_cfg) = cfg.synthetic_cohort_config() {
        let c = generate_synthetic_cohort(&cohort_cfg)?;
        return Ok(Loaded {
            panel: c.observed,
            labels: Some(c.labels),
            statics: None,
            truth: Some(c.truth),
        });
    }
    let syn = cfg.synthetic_config().expect("synthetic section present");
    let s = generate_synthetic(&syn)?;
    Ok(Loaded {
        panel: s.observed,
        labels: None,
        statics: None,
        truth: Some(s.truth),
    })
}
