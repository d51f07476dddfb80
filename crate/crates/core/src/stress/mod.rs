//! Test-set perturbations and the stress-test experiment.

mod perturb;

pub use perturb::{apply_both, apply_erasure, apply_noise, erasure_positions, StressKind, StressSpec, STANDARD_LEVELS};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{normalized_split, run_configs, stratified_split, summarize, EvalOptions, MetricSummary};
use crate::metrics::{evaluate_scores, MetricsReport};
use crate::model::{Model, ModelConfig};
use crate::training::{train, TrainConfig};

/// Specificity below this, with accuracy at or above the positive
/// prevalence, flags a majority-class collapse.
pub const COLLAPSE_SPECIFICITY: f64 = 0.35;

/// Scores each trained model on every perturbed copy of a normalized test
/// set. Returns one report per `(model, spec)` pair, models outermost.
pub fn stress_eval(
    models: &[&Model],
    test: &Dataset,
    specs: &[StressSpec],
    threshold: f64,
) -> Result<Vec<Vec<MetricsReport>>> {
    let stats = test
        .norm_stats
        .as_ref()
        .ok_or_else(|| Error::invalid("stress tests expect a normalized test set"))?;
    let perturbed = specs
        .iter()
        .map(|s| s.apply(&test.features, stats))
        .collect::<Result<Vec<_>>>()?;
    models
        .iter()
        .map(|m| {
            if !m.is_trained() {
                return Err(Error::NotTrained(m.variant().to_string()));
            }
            perturbed
                .iter()
                .map(|x| evaluate_scores(&m.predict_proba(x)?, &test.labels, threshold))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressPlan {
    pub kinds: Vec<StressKind>,
    pub levels: Vec<f64>,
    pub runs: usize,
    pub ratio: f64,
    pub seed: u64,
    pub options: EvalOptions,
    /// Accept any strength in [0, 1] instead of the standard levels.
    #[serde(default)]
    pub free_levels: bool,
}

impl StressPlan {
    /// Every kind at every standard level, 25 half/half runs.
    pub fn standard(seed: u64) -> Self {
        Self {
            kinds: StressKind::PERTURBING.to_vec(),
            levels: STANDARD_LEVELS.to_vec(),
            runs: 25,
            ratio: 0.5,
            seed,
            options: EvalOptions::default(),
            free_levels: false,
        }
    }

    /// The clean reference followed by every `(kind, level)` pair, seeded with
    /// `run_seed`.
    fn specs(&self, run_seed: u64) -> Result<Vec<StressSpec>> {
        let mut specs = vec![StressSpec::free(StressKind::Clean, 0.0, run_seed)?];
        for &kind in &self.kinds {
            for &level in &self.levels {
                specs.push(if self.free_levels {
                    StressSpec::free(kind, level, run_seed)?
                } else {
                    StressSpec::new(kind, level, run_seed)?
                });
            }
        }
        Ok(specs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressCell {
    pub variant: String,
    pub kind: StressKind,
    pub strength: f64,
    pub summary: Vec<MetricSummary>,
    /// Mean fraction of positive labels in the perturbed test sets.
    pub prevalence: f64,
    pub collapse: bool,
}

impl StressCell {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.summary.iter().find(|m| m.metric == metric).map(|m| m.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressReport {
    pub plan: StressPlan,
    pub cells: Vec<StressCell>,
    /// One line per condition, in plan order: either the collapsed models or
    /// an explicit "no collapse".
    pub collapse_statements: Vec<String>,
}

impl StressReport {
    pub fn cell(&self, variant: &str, kind: StressKind, strength: f64) -> Option<&StressCell> {
        self.cells
            .iter()
            .find(|c| c.variant == variant && c.kind == kind && (c.strength - strength).abs() < 1e-12)
    }

    /// The unperturbed reference for `variant`.
    pub fn baseline(&self, variant: &str) -> Option<&StressCell> {
        self.cell(variant, StressKind::Clean, 0.0)
    }

    pub fn collapsed(&self) -> impl Iterator<Item = &StressCell> {
        self.cells.iter().filter(|c| c.collapse)
    }

    /// The collapse line for one condition.
    pub fn collapse_statement(&self, kind: StressKind, strength: f64) -> Option<&str> {
        let prefix = condition_label(kind, strength);
        self.collapse_statements
            .iter()
            .find(|s| s.split(':').next() == Some(prefix.as_str()))
            .map(String::as_str)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// `model,kind,strength,metric,mean,ci` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "model,kind,strength,metric,mean,ci")?;
        for c in &self.cells {
            for m in &c.summary {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    c.variant, c.kind, c.strength, m.metric, m.mean, m.half_width
                )?;
            }
        }
        Ok(())
    }

    /// Accuracy, specificity and AuC against strength, one row per cell, with
    /// the clean reference repeated as strength 0 of every kind.
    pub fn write_curves_csv<W: Write>(&self, mut out: W) -> Result<()> {
        const CURVE: [&str; 3] = ["accuracy", "specificity", "auc"];
        writeln!(
            out,
            "model,kind,strength,accuracy,accuracy_ci,specificity,specificity_ci,auc,auc_ci"
        )?;
        let mut variants: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !variants.contains(&c.variant.as_str()) {
                variants.push(&c.variant);
            }
        }
        for v in variants {
            let base = self.baseline(v);
            for &kind in &self.plan.kinds {
                let mut rows: Vec<&StressCell> = base.into_iter().collect();
                rows.extend(self.cells.iter().filter(|c| c.variant == v && c.kind == kind));
                for c in rows {
                    let strength = if c.kind == StressKind::Clean { 0.0 } else { c.strength };
                    write!(out, "{v},{kind},{strength}")?;
                    for name in CURVE {
                        match c.summary.iter().find(|m| m.metric == name) {
                            Some(m) => write!(out, ",{},{}", m.mean, m.half_width)?,
                            None => write!(out, ",,")?,
                        }
                    }
                    writeln!(out)?;
                }
            }
        }
        Ok(())
    }
}

fn condition_label(kind: StressKind, strength: f64) -> String {
    format!("{kind} {strength:.4}")
}

fn collapse_statements(cells: &[StressCell]) -> Vec<String> {
    let mut conditions: Vec<(StressKind, f64)> = Vec::new();
    for c in cells {
        if !conditions.iter().any(|&(k, s)| k == c.kind && s == c.strength) {
            conditions.push((c.kind, c.strength));
        }
    }
    conditions
        .into_iter()
        .map(|(kind, strength)| {
            let flagged: Vec<&str> = cells
                .iter()
                .filter(|c| c.kind == kind && c.strength == strength && c.collapse)
                .map(|c| c.variant.as_str())
                .collect();
            let label = condition_label(kind, strength);
            if flagged.is_empty() {
                format!("{label}: no collapse")
            } else {
                format!(
                    "{label}: majority-class collapse (specificity < {COLLAPSE_SPECIFICITY}, accuracy >= prevalence) in {}",
                    flagged.join(", ")
                )
            }
        })
        .collect()
}

/// Repeated stratified splits; in each run every model is trained once on the
/// clean training half and scored on every perturbed copy of the test half.
/// All models in a run see the same perturbed matrices.
pub fn stress_experiment(
    dataset: &Dataset,
    models: &[ModelConfig],
    train_cfg: &TrainConfig,
    plan: &StressPlan,
) -> Result<StressReport> {
    if dataset.norm_stats.is_some() {
        return Err(Error::invalid("stress experiments expect an unnormalized dataset"));
    }
    if plan.runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    if models.is_empty() {
        return Err(Error::invalid("no models to stress"));
    }
    plan.specs(plan.seed)?;
    // per run: [model][spec] reports plus the test prevalence
    let per_run = (0..plan.runs)
        .into_par_iter()
        .map(|r| {
            let run_seed = plan.seed.wrapping_add(r as u64);
            let (train_idx, test_idx) = stratified_split(&dataset.labels, plan.ratio, run_seed)?;
            let (train_ds, test_ds) = normalized_split(dataset, &train_idx, &test_idx)?;
            let specs = plan.specs(run_seed)?;
            let trained = models
                .iter()
                .map(|cfg| {
                    let (m, t) = run_configs(cfg, train_cfg, plan.seed, r);
                    train(Model::build(m)?, &train_ds, &t)
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Model> = trained.iter().collect();
            let reports = stress_eval(&refs, &test_ds, &specs, plan.options.threshold)?;
            let prevalence = test_ds.positives() as f64 / test_ds.len() as f64;
            Ok((reports, prevalence))
        })
        .collect::<Result<Vec<_>>>()?;

    let specs = plan.specs(plan.seed)?;
    let prevalence = per_run.iter().map(|(_, p)| p).sum::<f64>() / plan.runs as f64;
    let mut cells = Vec::with_capacity(models.len() * specs.len());
    for (mi, cfg) in models.iter().enumerate() {
        for (si, spec) in specs.iter().enumerate() {
            let runs: Vec<MetricsReport> = per_run.iter().map(|(r, _)| r[mi][si].clone()).collect();
            let summary = summarize(&runs, &plan.options)?;
            let mean = |name: &str| summary.iter().find(|m| m.metric == name).map(|m| m.mean);
            let collapse = matches!(
                (mean("specificity"), mean("accuracy")),
                (Some(s), Some(a)) if s < COLLAPSE_SPECIFICITY && a >= prevalence
            );
            cells.push(StressCell {
                variant: cfg.variant.to_string(),
                kind: spec.kind,
                strength: spec.strength,
                summary,
                prevalence,
                collapse,
            });
        }
    }
    Ok(StressReport {
        plan: plan.clone(),
        collapse_statements: collapse_statements(&cells),
        cells,
    })
}
