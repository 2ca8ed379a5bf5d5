//! Run configuration, loaded from one TOML file.
//!
//! Seeds: the top-level `seed` (overridable with `--seed`) drives every
//! random component. A component seed that is set explicitly in the file
//! wins; otherwise it is derived from the top-level seed and the
//! component's name.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tdi_core::impute::ImputerSpec;
use tdi_core::ingest::SyntheticConfig;
use tdi_core::predict::{CohortFilter, CvConfig, FeatureConfig, LogisticParams, SyntheticCohortConfig};
use tdi_core::seed::derive;
use tdi_core::{MethodSpec, NamedMethod, TdiSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Z-score variables before imputing (fit on the full panel for
    /// imputation and masking, on training folds for prediction).
    #[serde(default)]
    pub standardize: bool,
    pub input: Option<InputConfig>,
    pub synthetic: Option<SyntheticSection>,
    #[serde(default)]
    pub imputers: Vec<MethodEntry>,
    /// Settings for every `kind = "tdi"` registry entry.
    #[serde(default)]
    pub tdi: toml::Table,
    #[serde(default)]
    pub impute: ImputeSection,
    #[serde(default)]
    pub masking: MaskingSection,
    #[serde(default)]
    pub cv: CvSection,
    #[serde(default)]
    pub task: TaskSection,

    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// `patient_id,time,variable,value`
    pub long_csv: PathBuf,
    /// Variables to keep, in column order. Defaults to every variable in the
    /// file, in order of first appearance.
    pub variables: Option<Vec<String>>,
    /// `variable,low,high`; values outside are dropped.
    pub ranges: Option<PathBuf>,
    #[serde(default = "one")]
    pub grid_hours: f64,
    /// Seeded random subsample of patients.
    pub max_patients: Option<usize>,
    /// `patient_id,label[,event_hours]`, needed by `predict`.
    pub labels: Option<PathBuf>,
    /// `patient_id,<covariate>,...`
    pub statics: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub n_patients: usize,
    pub n_timepoints: usize,
    pub n_variables: usize,
    pub temporal_corr: f64,
    pub cross_corr: f64,
    pub missing_profile: Vec<f64>,
    pub seed: Option<u64>,
    /// When set, binary outcomes are generated from these two variables.
    pub label_variables: Option<[usize; 2]>,
    #[serde(default = "default_coefficients")]
    pub coefficients: [f64; 2],
    #[serde(default)]
    pub intercept: f64,
}

fn default_coefficients() -> [f64; 2] {
    [1.5, 1.5]
}

/// One `[[imputers]]` entry: `name`, `kind` and the kind's keys. Use
/// `kind = "tdi"` to refer to the `[tdi]` section.
#[derive(Debug, Clone, Deserialize)]
pub struct MethodEntry {
    pub name: Option<String>,
    #[serde(flatten)]
    pub rest: toml::Table,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImputeSection {
    /// Registry name of the method used by `impute`; defaults to TDI.
    pub method: Option<String>,
    /// Number of multiple imputations (TDI only).
    #[serde(default = "one_usize")]
    pub m: usize,
}

fn one_usize() -> usize {
    1
}

impl Default for ImputeSection {
    fn default() -> Self {
        Self { method: None, m: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskingSection {
    #[serde(default = "default_p")]
    pub p: f64,
    pub seed: Option<u64>,
}

fn default_p() -> f64 {
    0.1
}

impl Default for MaskingSection {
    fn default() -> Self {
        Self { p: 0.1, seed: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvSection {
    #[serde(default = "five")]
    pub n_folds: usize,
    pub seed: Option<u64>,
    #[serde(default = "yes")]
    pub stratified: bool,
}

fn five() -> usize {
    5
}

fn yes() -> bool {
    true
}

impl Default for CvSection {
    fn default() -> Self {
        Self {
            n_folds: 5,
            seed: None,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    #[serde(default)]
    pub filter: CohortFilter,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub logistic: LogisticParams,
    /// Registry names evaluated by `predict`; defaults to all.
    pub methods: Option<Vec<String>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn masking_seed(&self) -> u64 {
        self.masking.seed.unwrap_or_else(|| derive(self.seed, "masking"))
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            n_folds: self.cv.n_folds,
            seed: self.cv.seed.unwrap_or_else(|| derive(self.seed, "cv")),
            stratified: self.cv.stratified,
        }
    }

    pub fn synthetic_config(&self) -> Option<SyntheticConfig> {
        self.synthetic.as_ref().map(|s| SyntheticConfig {
            n_patients: s.n_patients,
            n_timepoints: s.n_timepoints,
            n_variables: s.n_variables,
            temporal_corr: s.temporal_corr,
            cross_corr: s.cross_corr,
            missing_profile: s.missing_profile.clone(),
            seed: s.seed.unwrap_or_else(|| derive(self.seed, "synthetic")),
        })
    }

    /// Cohort generator settings when the synthetic section asks for labels.
    pub fn synthetic_cohort_config(&self) -> Option<SyntheticCohortConfig> {
        let s = self.synthetic.as_ref()?;
        Some(SyntheticCohortConfig {
            panel: self.synthetic_config()?,
            label_variables: s.label_variables?,
            coefficients: s.coefficients,
            intercept: s.intercept,
            window_hours: self.task.filter.window_hours,
            n_obs: self.task.features.n_obs,
        })
    }

    fn tdi_spec(&self, name: &str) -> Result<TdiSpec, CliError> {
        let mut spec: TdiSpec = self
            .tdi
            .clone()
            .try_into()
            .map_err(|e| CliError::Config(format!("[tdi]: {e}")))?;
        spec.validate().map_err(|e| CliError::Config(format!("[tdi]: {e}")))?;
        if !self.tdi.contains_key("seed") {
            spec.seed = derive(self.seed, &format!("method/{name}"));
        }
        Ok(spec)
    }

    /// The method registry. With no `[[imputers]]` entries it holds TDI alone.
    pub fn methods(&self) -> Result<Vec<NamedMethod>, CliError> {
        if self.imputers.is_empty() {
            return Ok(vec![NamedMethod::tdi("tdi", self.tdi_spec("tdi")?)]);
        }
        let mut out: Vec<NamedMethod> = Vec::new();
        for entry in &self.imputers {
            let kind = entry
                .rest
                .get("kind")
                .and_then(toml::Value::as_str)
                .ok_or_else(|| CliError::Config("every [[imputers]] entry needs a string `kind`".into()))?
                .to_string();
            let name = entry.name.clone().unwrap_or_else(|| kind.clone());
            if out.iter().any(|m| m.name == name) {
                return Err(CliError::Config(format!("duplicate imputer name `{name}`")));
            }
            let spec = if kind == "tdi" {
                if entry.rest.len() > 1 {
                    return Err(CliError::Config(format!(
                        "imputer `{name}`: TDI settings belong in the [tdi] section"
                    )));
                }
                MethodSpec::Tdi(self.tdi_spec(&name)?)
            } else {
                let mut spec: ImputerSpec = entry
                    .rest
                    .clone()
                    .try_into()
                    .map_err(|e| CliError::Config(format!("imputer `{name}`: {e}")))?;
                if !entry.rest.contains_key("seed") {
                    spec.seed = derive(self.seed, &format!("method/{name}"));
                }
                spec.validate()
                    .map_err(|e| CliError::Config(format!("imputer `{name}`: {e}")))?;
                MethodSpec::Imputer(spec)
            };
            out.push(NamedMethod::new(name, spec));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.input, &self.synthetic) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("set either [input] or [synthetic], not both".into()))
            }
            (None, None) => return Err(CliError::Config("one of [input] or [synthetic] is required".into())),
            _ => {}
        }
        if let Some(input) = &self.input {
            for p in [Some(&input.long_csv), input.ranges.as_ref(), input.labels.as_ref(), input.statics.as_ref()]
                .into_iter()
                .flatten()
            {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(CliError::Config(format!("input file {} does not exist", full.display())));
                }
            }
        }
        if !(self.masking.p > 0.0 && self.masking.p <= 1.0) {
            return Err(CliError::Config(format!("masking.p must be in (0, 1], got {}", self.masking.p)));
        }
        if self.impute.m == 0 {
            return Err(CliError::Config("impute.m must be at least 1".into()));
        }
        self.methods()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RunConfig {
        toml::from_str(text).unwrap()
    }

    const SYN: &str = r#"
seed = 7
[synthetic]
n_patients = 4
n_timepoints = 5
n_variables = 2
temporal_corr = 0.5
cross_corr = 0.2
missing_profile = [0.2]
"#;

    #[test]
    fn registry_from_entries() {
        let cfg = parse(&format!(
            "{SYN}\n[[imputers]]\nkind = \"mean\"\n[[imputers]]\nname = \"knn3\"\nkind = \"knn\"\nk = 3\n[[imputers]]\nkind = \"tdi\"\n"
        ));
        cfg.validate().unwrap();
        let methods = cfg.methods().unwrap();
        let names: Vec<_> = methods.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["mean", "knn3", "tdi"]);
        assert!(matches!(methods[2].spec, MethodSpec::Tdi(_)));
    }

    #[test]
    fn seeds_are_derived_unless_set() {
        let cfg = parse(SYN);
        assert_eq!(cfg.masking_seed(), derive(7, "masking"));
        let cfg = parse(&format!("{SYN}\n[masking]\nseed = 3\n"));
        assert_eq!(cfg.masking_seed(), 3);
    }

    #[test]
    fn bad_entries_rejected() {
        let cfg = parse(&format!("{SYN}\n[[imputers]]\nkind = \"mean\"\nk = 2\n"));
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let cfg = parse(&format!("{SYN}\n[[imputers]]\nkind = \"mean\"\n[[imputers]]\nkind = \"mean\"\n"));
        assert!(cfg.validate().is_err());
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }
}
