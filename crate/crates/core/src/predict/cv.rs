use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cohort::TaskCohort;
use super::features::{extract_baseline_features, FeatureConfig};
use super::logistic::{Classifier, LogisticParams};
use super::metrics::{aupr, auroc};
use crate::error::{Error, Result};
use crate::ingest::{apply_standardizer, fit_standardizer};
use crate::method::MethodSpec;
use crate::panel::build_mask;
use crate::seed;
use crate::tdi::{compute_frequencies, FrequencyMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub n_folds: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            n_folds: 5,
            seed: 0,
            stratified: true,
        }
    }
}

/// Per-fold preprocessing and the classifier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub features: FeatureConfig,
    /// Standardise with statistics of the training partition.
    pub standardize: bool,
    pub logistic: LogisticParams,
}

/// Fold index of every example. Within each class (or overall when not
/// stratified) examples are shuffled and dealt round-robin.
pub fn assign_folds(labels: &[bool], cv: &CvConfig) -> Result<Vec<usize>> {
    if cv.n_folds < 2 {
        return Err(Error::InvalidParameter(format!("n_folds must be >= 2, got {}", cv.n_folds)));
    }
    let mut rng = seed::rng(cv.seed, "cv/folds");
    let groups: Vec<Vec<usize>> = if cv.stratified {
        [true, false]
            .iter()
            .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
            .collect()
    } else {
        vec![(0..labels.len()).collect()]
    };
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for mut g in groups {
        g.shuffle(&mut rng);
        for i in g {
            fold[i] = next % cv.n_folds;
            next += 1;
        }
    }
    for k in 0..cv.n_folds {
        let test: Vec<bool> = (0..labels.len()).filter(|&i| fold[i] == k).map(|i| labels[i]).collect();
        let train: Vec<bool> = (0..labels.len()).filter(|&i| fold[i] != k).map(|i| labels[i]).collect();
        let both = |v: &[bool]| v.iter().any(|&l| l) && v.iter().any(|&l| !l);
        if !both(&test) || !both(&train) {
            return Err(Error::FoldDegenerate(k));
        }
    }
    Ok(fold)
}

/// Returns the labels in a seeded random order (permutation null).
pub fn shuffle_labels(labels: &[bool], seed: u64) -> Vec<bool> {
    let mut out = labels.to_vec();
    out.shuffle(&mut seed::rng(seed, "cv/permute"));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub auroc: f64,
    pub aupr: f64,
    /// Measurement frequencies estimated on the training partition and used
    /// to impute both partitions. Empty for precomputed features.
    pub train_frequencies: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation across folds.
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        };
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, median, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub classifier: String,
    pub cv: CvConfig,
    pub folds: Vec<FoldResult>,
    pub auroc: Summary,
    pub aupr: Summary,
}

impl CvReport {
    fn new(classifier: &str, cv: &CvConfig, folds: Vec<FoldResult>) -> Self {
        let au: Vec<f64> = folds.iter().map(|f| f.auroc).collect();
        let ap: Vec<f64> = folds.iter().map(|f| f.aupr).collect();
        CvReport {
            classifier: classifier.to_string(),
            cv: *cv,
            auroc: Summary::of(&au),
            aupr: Summary::of(&ap),
            folds,
        }
    }

    /// `fold,n_train,n_test,auroc,aupr`
    pub fn write_folds_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["fold", "n_train", "n_test", "auroc", "aupr"])?;
        for f in &self.folds {
            w.write_record([
                f.fold.to_string(),
                f.n_train.to_string(),
                f.n_test.to_string(),
                f.auroc.to_string(),
                f.aupr.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `metric,mean,median,sd` with one line for AUROC and one for AUPR.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "mean", "median", "sd"])?;
        for (name, s) in [("auroc", self.auroc), ("aupr", self.aupr)] {
            w.write_record([name.to_string(), s.mean.to_string(), s.median.to_string(), s.sd.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

fn split(fold: &[usize], k: usize) -> (Vec<usize>, Vec<usize>) {
    (0..fold.len()).partition(|&i| fold[i] != k)
}

/// Cross-validation with imputation inside each fold, using the logistic
/// classifier from `task`.
pub fn cross_validate(cohort: &TaskCohort, method: &MethodSpec, cv: &CvConfig, task: &TaskConfig) -> Result<CvReport> {
    cross_validate_with(cohort, method, cv, task, &task.logistic)
}

/// Per fold: standardisation and measurement frequencies are estimated on
/// the training patients only; training and test patients are then imputed
/// separately, features extracted, the classifier fitted on training
/// features and scored on test features. Folds run concurrently.
pub fn cross_validate_with<C: Classifier>(
    cohort: &TaskCohort,
    method: &MethodSpec,
    cv: &CvConfig,
    task: &TaskConfig,
    classifier: &C,
) -> Result<CvReport> {
    let fold = assign_folds(&cohort.labels, cv)?;
    let mode = match method {
        MethodSpec::Tdi(s) => s.frequency_mode,
        MethodSpec::Imputer(_) => FrequencyMode::default(),
    };
    let folds = (0..cv.n_folds)
        .into_par_iter()
        .map(|k| {
            let (train_idx, test_idx) = split(&fold, k);
            let mut train = cohort.select(&train_idx);
            let mut test = cohort.select(&test_idx);
            if task.standardize {
                let params = fit_standardizer(&train.panel)?;
                train.panel = apply_standardizer(&train.panel, &params)?;
                test.panel = apply_standardizer(&test.panel, &params)?;
            }
            let train_mask = build_mask(&train.panel);
            let test_mask = build_mask(&test.panel);
            let freqs = compute_frequencies(&train.panel, &train_mask, mode)?;

            let features = |part: &TaskCohort, mask| -> Result<Vec<Vec<f64>>> {
                let imputed = method.impute(&part.panel, mask, Some(&freqs))?;
                extract_baseline_features(&imputed, mask, &task.features, part.statics.as_deref())
            };
            let x_train = features(&train, &train_mask)?;
            let x_test = features(&test, &test_mask)?;
            let scores = classifier.fit_score(&x_train, &train.labels, &x_test)?;
            Ok(FoldResult {
                fold: k,
                n_train: train_idx.len(),
                n_test: test_idx.len(),
                auroc: auroc(&test.labels, &scores)?,
                aupr: aupr(&test.labels, &scores)?,
                train_frequencies: freqs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvReport::new(classifier.name(), cv, folds))
}

/// Cross-validation on precomputed feature vectors.
pub fn cross_validate_features<C: Classifier>(
    features: &[Vec<f64>],
    labels: &[bool],
    cv: &CvConfig,
    classifier: &C,
) -> Result<CvReport> {
    if features.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} examples vs {} labels",
            features.len(),
            labels.len()
        )));
    }
    let fold = assign_folds(labels, cv)?;
    let folds = (0..cv.n_folds)
        .into_par_iter()
        .map(|k| {
            let (train_idx, test_idx) = split(&fold, k);
            let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<bool>) {
                (idx.iter().map(|&i| features[i].clone()).collect(), idx.iter().map(|&i| labels[i]).collect())
            };
            let (x_train, y_train) = pick(&train_idx);
            let (x_test, y_test) = pick(&test_idx);
            let scores = classifier.fit_score(&x_train, &y_train, &x_test)?;
            Ok(FoldResult {
                fold: k,
                n_train: train_idx.len(),
                n_test: test_idx.len(),
                auroc: auroc(&y_test, &scores)?,
                aupr: aupr(&y_test, &scores)?,
                train_frequencies: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvReport::new(classifier.name(), cv, folds))
}
