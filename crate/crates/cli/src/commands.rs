use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use robin_core::data::{label_encode, load_csv, synth_generate, Dataset, Schema, SynthOptions};
use robin_core::evaluation::{kfold_cv, repeated_split, EvalReport};
use robin_core::interpret::{attention_heatmap, export_representations, global_importance, write_representations_csv};
use robin_core::model::{Model, Variant};
use robin_core::stress::{stress_experiment, StressKind, StressPlan, StressSpec};
use robin_core::training::{train as fit, write_loss_csv};
use robin_core::Error;
use serde::Serialize;

use crate::config::{resolve_seed, RunConfig, TrainFlags};
use crate::output::{finish, manifest_beside, Outputs};
use crate::DataArgs;

fn load_schema(args: &DataArgs) -> anyhow::Result<Schema> {
    match &args.schema {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading schema {}", p.display()))?;
            Ok(Schema::from_json(&text)?)
        }
        None => Ok(Schema::clinical()),
    }
}

/// Label-encoded, unnormalized dataset.
fn load_dataset(args: &DataArgs) -> anyhow::Result<Dataset> {
    let schema = load_schema(args)?;
    let raw = load_csv(&args.data, &schema).with_context(|| format!("loading {}", args.data.display()))?;
    Ok(label_encode(&raw, &schema)?)
}

fn inputs(args: &DataArgs) -> Vec<&Path> {
    let mut v = vec![args.data.as_path()];
    if let Some(s) = &args.schema {
        v.push(s.as_path());
    }
    v
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> robin_core::Result<()>) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

pub fn synth(
    seed: Option<u64>,
    n: usize,
    positive_fraction: f64,
    missing_rate: f64,
    exact: bool,
    out: &Path,
) -> anyhow::Result<()> {
    let started = Instant::now();
    let seed = resolve_seed(seed, None)?;
    let mut opts = SynthOptions::new(seed, n)
        .with_positive_fraction(positive_fraction)
        .with_missing_rate(missing_rate);
    if exact {
        opts = opts.exact();
    }
    let table = synth_generate(&opts, &Schema::clinical())?;
    let mut outputs = Outputs::new();
    outputs.add(out, table.to_csv_string()?);
    finish(outputs, manifest_beside(out), "synth", &opts, Some(seed), &[], started)
}

pub fn train(
    data: &DataArgs,
    variant: Variant,
    flags: &TrainFlags,
    out_model: &Path,
    loss_csv: Option<&Path>,
) -> anyhow::Result<()> {
    let started = Instant::now();
    let (cfg, seed) = flags.resolve()?;
    let ds = load_dataset(data)?.normalize()?;
    let mut model_cfg = cfg.model.clone();
    model_cfg.variant = variant;
    model_cfg.input_dim = ds.n_features();
    let model = fit(Model::build(model_cfg)?, &ds, &cfg.train)?;
    let mut outputs = Outputs::new();
    outputs.add(out_model, model.to_json());
    if let Some(p) = loss_csv {
        outputs.add(p, csv_bytes(|b| write_loss_csv(&model.train_log, b))?);
    }
    finish(
        outputs,
        manifest_beside(out_model),
        "train",
        &cfg,
        Some(seed),
        &inputs(data),
        started,
    )
}

#[derive(Serialize)]
struct ProtocolOutput {
    reports: Vec<EvalReport>,
    table: String,
}

fn protocol_output(reports: Vec<EvalReport>) -> anyhow::Result<String> {
    let mut table = EvalReport::table_header();
    for r in &reports {
        table.push('\n');
        table.push_str(&r.table_row());
    }
    println!(
        "{}",
        reports.first().map(|r| r.description.as_str()).unwrap_or_default()
    );
    println!("{table}");
    Ok(serde_json::to_string_pretty(&ProtocolOutput { reports, table })? + "\n")
}

fn per_variant<F>(cfg: &RunConfig, ds: &Dataset, variants: &[Variant], mut run: F) -> anyhow::Result<Vec<EvalReport>>
where
    F: FnMut(&robin_core::model::ModelConfig) -> robin_core::Result<EvalReport>,
{
    if variants.is_empty() {
        return Err(Error::InvalidArgument("no variants given".into()).into());
    }
    variants
        .iter()
        .map(|&v| {
            let mut m = cfg.model.clone();
            m.variant = v;
            m.input_dim = ds.n_features();
            run(&m).with_context(|| format!("variant {v}"))
        })
        .collect()
}

pub fn crossval(data: &DataArgs, variants: &[Variant], k: usize, flags: &TrainFlags, out: &Path) -> anyhow::Result<()> {
    let started = Instant::now();
    let (cfg, seed) = flags.resolve()?;
    let ds = load_dataset(data)?;
    let reports = per_variant(&cfg, &ds, variants, |m| {
        kfold_cv(&ds, k, m, &cfg.train, seed, &cfg.evaluation)
    })?;
    let mut outputs = Outputs::new();
    outputs.add(out, protocol_output(reports)?);
    finish(
        outputs,
        manifest_beside(out),
        "crossval",
        &cfg,
        Some(seed),
        &inputs(data),
        started,
    )
}

pub fn evaluate(
    data: &DataArgs,
    variants: &[Variant],
    split: f64,
    runs: usize,
    flags: &TrainFlags,
    out: &Path,
) -> anyhow::Result<()> {
    let started = Instant::now();
    let (cfg, seed) = flags.resolve()?;
    let ds = load_dataset(data)?;
    let reports = per_variant(&cfg, &ds, variants, |m| {
        repeated_split(&ds, split, runs, m, &cfg.train, seed, &cfg.evaluation)
    })?;
    let mut outputs = Outputs::new();
    outputs.add(out, protocol_output(reports)?);
    finish(
        outputs,
        manifest_beside(out),
        "evaluate",
        &cfg,
        Some(seed),
        &inputs(data),
        started,
    )
}

pub struct StressArgs {
    pub kinds: Vec<StressKind>,
    pub levels: Vec<f64>,
    pub free_levels: bool,
    pub split: f64,
    pub runs: usize,
}

pub fn stress(
    data: &DataArgs,
    variants: &[Variant],
    args: StressArgs,
    flags: &TrainFlags,
    out_dir: &Path,
) -> anyhow::Result<()> {
    let started = Instant::now();
    let (cfg, seed) = flags.resolve()?;
    if args.kinds.contains(&StressKind::Clean) {
        return Err(
            Error::InvalidArgument("the clean reference is always included; pass noise, erase or both".into()).into(),
        );
    }
    let levels = args
        .levels
        .iter()
        .map(|&l| {
            let spec = if args.free_levels {
                StressSpec::free(StressKind::Noise, l, seed)
            } else {
                StressSpec::new(StressKind::Noise, l, seed)
            };
            spec.map(|s| s.strength)
        })
        .collect::<robin_core::Result<Vec<_>>>()?;
    let ds = load_dataset(data)?;
    if variants.is_empty() {
        return Err(Error::InvalidArgument("no variants given".into()).into());
    }
    let models: Vec<_> = variants
        .iter()
        .map(|&v| {
            let mut m = cfg.model.clone();
            m.variant = v;
            m.input_dim = ds.n_features();
            m
        })
        .collect();
    let plan = StressPlan {
        kinds: args.kinds,
        levels,
        runs: args.runs,
        ratio: args.split,
        seed,
        options: cfg.evaluation,
        free_levels: args.free_levels,
    };
    let report = stress_experiment(&ds, &models, &cfg.train, &plan)?;
    for line in &report.collapse_statements {
        println!("{line}");
    }
    let mut outputs = Outputs::new();
    outputs.add(out_dir.join("stress_report.json"), report.to_json()?);
    outputs.add(out_dir.join("stress_report.csv"), csv_bytes(|b| report.write_csv(b))?);
    outputs.add(
        out_dir.join("stress_curves.csv"),
        csv_bytes(|b| report.write_curves_csv(b))?,
    );
    finish(
        outputs,
        out_dir.join("manifest.json"),
        "stress",
        &cfg,
        Some(seed),
        &inputs(data),
        started,
    )
}

pub fn explain(model_path: &Path, data: &DataArgs, samples: &[usize], png: bool, out_dir: &Path) -> anyhow::Result<()> {
    let started = Instant::now();
    let model = Model::load(model_path).with_context(|| format!("loading model {}", model_path.display()))?;
    let stats = model
        .norm_stats
        .clone()
        .ok_or_else(|| Error::NotTrained("model carries no normalization statistics".into()))?;
    let ds = load_dataset(data)?.normalize_with(&stats)?;
    if ds.feature_names() != model.feature_names {
        return Err(Error::Data("data attributes do not match the model's features".into()).into());
    }
    let mut outputs = Outputs::new();
    if model.variant().has_se() {
        let imp = global_importance(&model)?;
        outputs.add(out_dir.join("importance.csv"), csv_bytes(|b| imp.write_csv(b))?);
    }
    if model.variant().has_attention() {
        for &i in samples {
            if i >= ds.len() {
                return Err(Error::InvalidArgument(format!("sample {i} is out of range for {} rows", ds.len())).into());
            }
            let h = attention_heatmap(&model, ds.features.row(i), i)?;
            outputs.add(out_dir.join(format!("heatmap_{i}.csv")), csv_bytes(|b| h.write_csv(b))?);
            if png {
                outputs.add(out_dir.join(format!("heatmap_{i}.png")), h.png_bytes(8)?);
            }
        }
    }
    let reps = export_representations(&model, &ds.features)?;
    outputs.add(
        out_dir.join("representations.csv"),
        csv_bytes(|b| write_representations_csv(&reps, &ds.labels, b))?,
    );
    #[derive(Serialize)]
    struct ExplainConfig<'a> {
        variant: String,
        samples: &'a [usize],
        png: bool,
    }
    let cfg = ExplainConfig {
        variant: model.variant().to_string(),
        samples,
        png,
    };
    let mut ins = inputs(data);
    ins.push(model_path);
    finish(
        outputs,
        out_dir.join("manifest.json"),
        "explain",
        &cfg,
        None,
        &ins,
        started,
    )
}
