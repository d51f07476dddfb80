//! Cross-validation and repeated-split protocols with confidence intervals.

mod ci;
mod split;

pub use ci::{confidence_interval, CiMethod};
pub use split::{stratified_folds, stratified_split};

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_scores, MetricsReport};
use crate::model::{Model, ModelConfig};
use crate::training::{train, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    KFold { k: usize },
    RepeatedSplit { ratio: f64, runs: usize },
}

impl Protocol {
    pub fn describe(&self) -> String {
        match self {
            Protocol::KFold { k } => format!("stratified {k}-fold cross-validation"),
            Protocol::RepeatedSplit { ratio, runs } => {
                format!(
                    "{runs} stratified {:.0}/{:.0} train/test splits",
                    ratio * 100.0,
                    (1.0 - ratio) * 100.0
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub level: f64,
    pub ci_method: CiMethod,
    pub threshold: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            level: 0.95,
            ci_method: CiMethod::StudentT,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    pub half_width: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub description: String,
    pub variant: String,
    pub seed: u64,
    pub options: EvalOptions,
    pub summary: Vec<MetricSummary>,
    pub runs: Vec<MetricsReport>,
}

pub const METRIC_NAMES: [&str; 6] = ["accuracy", "precision", "sensitivity", "specificity", "f1", "auc"];

impl EvalReport {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.summary.iter().find(|m| m.metric == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn table_header() -> String {
        let mut s = String::from("| model |");
        for m in METRIC_NAMES {
            let _ = write!(s, " {m} |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(METRIC_NAMES.len()));
        s
    }

    /// One table row with every metric as a percentage `mean ± half-width`.
    pub fn table_row(&self) -> String {
        let mut s = format!("| {} |", self.variant);
        for name in METRIC_NAMES {
            match self.metric(name) {
                Some(m) => {
                    let _ = write!(s, " {:.2} ± {:.2} |", 100.0 * m.mean, 100.0 * m.half_width);
                }
                None => s.push_str(" n/a |"),
            }
        }
        s
    }
}

/// Aggregates per-run reports into per-metric mean and interval.
pub fn summarize(runs: &[MetricsReport], options: &EvalOptions) -> Result<Vec<MetricSummary>> {
    let mut out = Vec::with_capacity(METRIC_NAMES.len());
    for name in METRIC_NAMES {
        let values: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.values().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v))
            .collect();
        if values.is_empty() {
            continue;
        }
        let (mean, half_width) = confidence_interval(&values, options.level, options.ci_method)?;
        out.push(MetricSummary {
            metric: name.to_string(),
            mean,
            half_width,
            values,
        });
    }
    Ok(out)
}

/// Splits an unnormalized dataset into normalized train and test parts, with
/// the min-max statistics fitted on the training rows only.
pub fn normalized_split(dataset: &Dataset, train_idx: &[usize], test_idx: &[usize]) -> Result<(Dataset, Dataset)> {
    let train_ds = dataset.subset(train_idx).normalize()?;
    let stats = train_ds.norm_stats.clone().expect("normalize records its statistics");
    let test_ds = dataset.subset(test_idx).normalize_with(&stats)?;
    Ok((train_ds, test_ds))
}

/// Builds and trains a model on `train_ds`, then scores it on `test_ds`.
/// Both are expected to be normalized with the same statistics.
pub fn fit_and_score(
    train_ds: &Dataset,
    test_ds: &Dataset,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    threshold: f64,
) -> Result<(Model, MetricsReport)> {
    let model = train(Model::build(model_cfg.clone())?, train_ds, train_cfg)?;
    let probs = model.predict_proba(&test_ds.features)?;
    let report = evaluate_scores(&probs, &test_ds.labels, threshold)?;
    Ok((model, report))
}

/// Model and training configuration for run `r` of a protocol seeded with `seed`.
pub fn run_configs(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    seed: u64,
    r: usize,
) -> (ModelConfig, TrainConfig) {
    let run_seed = seed.wrapping_add(r as u64);
    (
        model_cfg.clone().with_seed(run_seed),
        TrainConfig {
            seed: run_seed,
            ..train_cfg.clone()
        },
    )
}

fn check_dataset(dataset: &Dataset) -> Result<()> {
    if dataset.norm_stats.is_some() {
        return Err(Error::invalid(
            "protocols expect an unnormalized dataset; statistics are fitted per training split",
        ));
    }
    Ok(())
}

/// Stratified k-fold cross-validation. Fold `i` trains with seed `seed + i`.
pub fn kfold_cv(
    dataset: &Dataset,
    k: usize,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    seed: u64,
    options: &EvalOptions,
) -> Result<EvalReport> {
    check_dataset(dataset)?;
    let folds = stratified_folds(&dataset.labels, k, seed)?;
    for (i, fold) in folds.iter().enumerate() {
        let pos = fold.iter().filter(|&&j| dataset.labels[j] != 0).count();
        if pos == 0 || pos == fold.len() {
            return Err(Error::Data(format!("fold {i} lacks a class after stratification")));
        }
    }
    let runs = folds
        .par_iter()
        .enumerate()
        .map(|(i, test_idx)| {
            let train_idx = split::complement(dataset.len(), test_idx);
            let (train_ds, test_ds) = normalized_split(dataset, &train_idx, test_idx)?;
            let (m, t) = run_configs(model_cfg, train_cfg, seed, i);
            fit_and_score(&train_ds, &test_ds, &m, &t, options.threshold).map(|(_, r)| r)
        })
        .collect::<Result<Vec<_>>>()?;
    let protocol = Protocol::KFold { k };
    Ok(EvalReport {
        protocol,
        description: protocol.describe(),
        variant: model_cfg.variant.to_string(),
        seed,
        options: *options,
        summary: summarize(&runs, options)?,
        runs,
    })
}

/// `runs` stratified train/test splits; run `r` splits and trains with seed `seed + r`.
pub fn repeated_split(
    dataset: &Dataset,
    ratio: f64,
    runs: usize,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    seed: u64,
    options: &EvalOptions,
) -> Result<EvalReport> {
    check_dataset(dataset)?;
    if runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    let reports = (0..runs)
        .into_par_iter()
        .map(|r| {
            let run_seed = seed.wrapping_add(r as u64);
            let (train_idx, test_idx) = stratified_split(&dataset.labels, ratio, run_seed)?;
            let (train_ds, test_ds) = normalized_split(dataset, &train_idx, &test_idx)?;
            let (m, t) = run_configs(model_cfg, train_cfg, seed, r);
            fit_and_score(&train_ds, &test_ds, &m, &t, options.threshold).map(|(_, rep)| rep)
        })
        .collect::<Result<Vec<_>>>()?;
    let protocol = Protocol::RepeatedSplit { ratio, runs };
    Ok(EvalReport {
        protocol,
        description: protocol.describe(),
        variant: model_cfg.variant.to_string(),
        seed,
        options: *options,
        summary: summarize(&reports, options)?,
        runs: reports,
    })
}
