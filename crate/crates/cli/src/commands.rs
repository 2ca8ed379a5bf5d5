use std::path::Path;

use serde::Serialize;
use tdi_core::eval::{missing_rate_after_ffill, run_ffill_subset_benchmark, run_masking_benchmark, MaskingReport};
use tdi_core::ingest::{apply_standardizer, fit_standardizer, invert_standardizer, write_long_csv};
use tdi_core::predict::{build_cohort, cross_validate, CvReport, FilterSummary, TaskConfig};
use tdi_core::tdi::{compute_frequencies, multiple_impute, FrequencyMode};
use tdi_core::{
    build_mask, ImputationResult, MethodSpec, NamedMethod, PanelDataset, StandardizationParams,
};

use crate::config::RunConfig;
use crate::data::{load, Loaded};
use crate::error::CliError;

/// Files produced by a command, held in memory until the command succeeds.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, f: impl FnOnce(&mut Vec<u8>) -> tdi_core::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.files.push((name.into(), buf));
        Ok(())
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        let fail = |path: &Path, source| CliError::Output {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| fail(dir, e))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| fail(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Impute,
    MaskEval,
    FfillEval,
    Predict,
    Synth,
    Stats,
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Outputs, CliError> {
    cfg.validate()?;
    match command {
        Command::Synth => synth(cfg),
        _ => {
            let data = load(cfg)?;
            match command {
                Command::Impute => impute(cfg, &data),
                Command::MaskEval => mask_eval(cfg, &data, false),
                Command::FfillEval => mask_eval(cfg, &data, true),
                Command::Predict => predict(cfg, &data),
                Command::Stats => stats(cfg, &data),
                Command::Synth => unreachable!(),
            }
        }
    }
}

fn standardized(cfg: &RunConfig, panel: &PanelDataset) -> Result<(PanelDataset, Option<StandardizationParams>), CliError> {
    if cfg.standardize {
        let params = fit_standardizer(panel)?;
        Ok((apply_standardizer(panel, &params)?, Some(params)))
    } else {
        Ok((panel.clone(), None))
    }
}

fn original_units(values: &PanelDataset, params: Option<&StandardizationParams>) -> tdi_core::Result<PanelDataset> {
    match params {
        Some(p) => invert_standardizer(values, p),
        None => Ok(values.clone()),
    }
}

fn write_provenance(result: &ImputationResult, out: &mut Vec<u8>) -> tdi_core::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["patient_id", "time", "variable", "source", "weight"])?;
    let data = &result.values;
    for (i, p) in data.patients().iter().enumerate() {
        for (t, time) in p.timestamps().iter().enumerate() {
            for (d, var) in data.variables().iter().enumerate() {
                let tag = result.provenance_at(i, t, d);
                w.write_record([
                    p.id().to_string(),
                    time.to_string(),
                    var.name.clone(),
                    tag.label().to_string(),
                    tag.weight().map(|x| x.to_string()).unwrap_or_default(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn impute(cfg: &RunConfig, data: &Loaded) -> Result<Outputs, CliError> {
    let methods = cfg.methods()?;
    let method = match &cfg.impute.method {
        Some(name) => methods
            .iter()
            .find(|m| &m.name == name)
            .ok_or_else(|| CliError::Config(format!("impute.method `{name}` is not in the registry")))?,
        None => methods
            .iter()
            .find(|m| matches!(m.spec, MethodSpec::Tdi(_)))
            .unwrap_or(&methods[0]),
    };
    let (panel, params) = standardized(cfg, &data.panel)?;
    let mask = build_mask(&panel);
    let mut out = Outputs::default();

    if cfg.impute.m >= 2 {
        let MethodSpec::Tdi(spec) = &method.spec else {
            return Err(CliError::Config("multiple imputation (m >= 2) requires a TDI method".into()));
        };
        let mi = multiple_impute(&panel, &mask, spec, cfg.impute.m)?;
        for (seed, r) in mi.seeds.iter().zip(&mi.results) {
            let values = original_units(&r.values, params.as_ref())?;
            out.add(format!("imputed_seed{seed}.csv"), |b| write_long_csv(&values, b))?;
        }
        out.add("provenance.csv", |b| write_provenance(&mi.results[0], b))?;
        out.add("variance_summary.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["patient_id", "time", "variable", "mean", "variance"])?;
            let n_vars = panel.n_vars();
            for (i, p) in panel.patients().iter().enumerate() {
                for (t, time) in p.timestamps().iter().enumerate() {
                    for d in 0..n_vars {
                        if mask.get(i, t, d) {
                            continue;
                        }
                        let k = t * n_vars + d;
                        let (mut mean, mut var) = (mi.mean[i][k], mi.variance[i][k]);
                        if let Some(s) = &params {
                            mean = s.invert_value(d, mean);
                            var *= s.std[d] * s.std[d];
                        }
                        w.write_record([
                            p.id().to_string(),
                            time.to_string(),
                            panel.variables()[d].name.clone(),
                            mean.to_string(),
                            var.to_string(),
                        ])?;
                    }
                }
            }
            w.flush()?;
            Ok(())
        })?;
    } else {
        let result = method.spec.impute(&panel, &mask, None).map_err(|e| tdi_core::Error::Method {
            method: method.name.clone(),
            source: Box::new(e),
        })?;
        let values = original_units(&result.values, params.as_ref())?;
        out.add("imputed.csv", |b| write_long_csv(&values, b))?;
        out.add("provenance.csv", |b| write_provenance(&result, b))?;
    }
    Ok(out)
}

fn mask_eval(cfg: &RunConfig, data: &Loaded, ffill_subset: bool) -> Result<Outputs, CliError> {
    let methods = cfg.methods()?;
    let (panel, params) = standardized(cfg, &data.panel)?;
    let seed = cfg.masking_seed();
    let report: MaskingReport = if ffill_subset {
        run_ffill_subset_benchmark(&panel, &methods, cfg.masking.p, seed, params.as_ref())?
    } else {
        run_masking_benchmark(&panel, &methods, cfg.masking.p, seed, params.as_ref())?
    };
    let prefix = if ffill_subset { "ffill_eval" } else { "mask_eval" };
    let mut out = Outputs::default();
    out.add(format!("{prefix}.csv"), |b| report.write_csv(b))?;
    out.add(format!("{prefix}.json"), |b| report.write_json(b))?;
    out.add(format!("{prefix}_nrmse_by_variable.csv"), |b| report.write_nrmse_by_variable(b))?;
    if let Some(rows) = &report.original_rows {
        out.add(format!("{prefix}_original_units.csv"), |b| tdi_core::eval::write_rows_csv(rows, b))?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct PredictOutput<'a> {
    cohort: FilterSummary,
    methods: Vec<MethodReport<'a>>,
}

#[derive(Serialize)]
struct MethodReport<'a> {
    name: &'a str,
    spec: &'a MethodSpec,
    report: CvReport,
}

fn predict(cfg: &RunConfig, data: &Loaded) -> Result<Outputs, CliError> {
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| CliError::Config("predict needs labels (input.labels or synthetic.label_variables)".into()))?;
    let registry = cfg.methods()?;
    let methods: Vec<&NamedMethod> = match &cfg.task.methods {
        Some(names) => names
            .iter()
            .map(|n| {
                registry
                    .iter()
                    .find(|m| &m.name == n)
                    .ok_or_else(|| CliError::Config(format!("task.methods: `{n}` is not in the registry")))
            })
            .collect::<Result<_, _>>()?,
        None => registry.iter().collect(),
    };
    let (cohort, summary) = build_cohort(&data.panel, labels, data.statics.as_ref(), &cfg.task.filter)?;
    log::info!("cohort: {summary:?}");
    let task = TaskConfig {
        features: cfg.task.features,
        standardize: cfg.standardize,
        logistic: cfg.task.logistic,
    };
    let cv = cfg.cv_config();
    let mut reports = Vec::new();
    for m in &methods {
        let report = cross_validate(&cohort, &m.spec, &cv, &task).map_err(|e| tdi_core::Error::Method {
            method: m.name.clone(),
            source: Box::new(e),
        })?;
        reports.push(MethodReport {
            name: &m.name,
            spec: &m.spec,
            report,
        });
    }

    let mut out = Outputs::default();
    for r in &reports {
        out.add(format!("predict_{}_folds.csv", r.name), |b| r.report.write_folds_csv(b))?;
    }
    out.add("predict_summary.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["method", "metric", "mean", "median", "sd"])?;
        for r in &reports {
            for (metric, s) in [("auroc", r.report.auroc), ("aupr", r.report.aupr)] {
                w.write_record([
                    r.name.to_string(),
                    metric.to_string(),
                    s.mean.to_string(),
                    s.median.to_string(),
                    s.sd.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    let doc = PredictOutput {
        cohort: summary,
        methods: reports,
    };
    out.add("predict.json", |b| Ok(serde_json::to_writer_pretty(b, &doc)?))?;
    Ok(out)
}

fn frequency_mode(cfg: &RunConfig) -> Result<FrequencyMode, CliError> {
    for m in cfg.methods()? {
        if let MethodSpec::Tdi(spec) = m.spec {
            return Ok(spec.frequency_mode);
        }
    }
    Ok(FrequencyMode::default())
}

fn stats(cfg: &RunConfig, data: &Loaded) -> Result<Outputs, CliError> {
    let panel = &data.panel;
    let mask = build_mask(panel);
    let freqs = compute_frequencies(panel, &mask, frequency_mode(cfg)?)?;
    let after_ffill = missing_rate_after_ffill(panel, &mask)?;
    let total = panel.n_rows();
    let mut out = Outputs::default();
    out.add("stats.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record([
            "variable",
            "n_observed",
            "mean",
            "sd",
            "missing_rate",
            "frequency",
            "missing_rate_after_ffill",
        ])?;
        for (d, var) in panel.variables().iter().enumerate() {
            let vals: Vec<f64> = panel
                .patients()
                .iter()
                .flat_map(|p| (0..p.len()).filter_map(move |t| p.get(t, d)))
                .collect();
            let n = vals.len();
            let (mean, sd) = if n > 0 {
                let mean = vals.iter().sum::<f64>() / n as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                (mean.to_string(), var.sqrt().to_string())
            } else {
                (String::new(), String::new())
            };
            w.write_record([
                var.name.clone(),
                n.to_string(),
                mean,
                sd,
                (1.0 - n as f64 / total as f64).to_string(),
                freqs[d].to_string(),
                after_ffill[d].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(out)
}

fn synth(cfg: &RunConfig) -> Result<Outputs, CliError> {
    if cfg.synthetic.is_none() {
        return Err(CliError::Config("synth needs a [synthetic] section".into()));
    }
    let data = load(cfg)?;
    let mut out = Outputs::default();
    out.add("synthetic_observed.csv", |b| write_long_csv(&data.panel, b))?;
    if let Some(truth) = &data.truth {
        out.add("synthetic_truth.csv", |b| write_long_csv(truth, b))?;
    }
    if let Some(labels) = &data.labels {
        out.add("labels.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["patient_id", "label"])?;
            for l in labels {
                w.write_record([l.patient_id.as_str(), if l.label { "1" } else { "0" }])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    Ok(out)
}
