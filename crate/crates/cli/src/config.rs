use std::path::Path;

use anyhow::Context;
use robin_core::evaluation::EvalOptions;
use robin_core::model::ModelConfig;
use robin_core::training::TrainConfig;
use serde::{Deserialize, Serialize};

/// Everything a run depends on besides its input files. Loaded from an
/// optional JSON file, then overridden by command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Architecture template; `variant` and `input_dim` are set per run.
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub evaluation: EvalOptions,
}

/// Overrides shared by the training commands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct TrainFlags {
    /// JSON run configuration; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Base seed. Falls back to the config file, then ROBIN_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    /// Mini-batch size; full batch when omitted.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Comma-separated block widths, e.g. 64,48,32,16.
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Probability threshold for positive predictions.
    #[arg(long)]
    pub threshold: Option<f64>,
}

impl TrainFlags {
    pub fn resolve(&self) -> anyhow::Result<(RunConfig, u64)> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if let Some(lr) = self.learning_rate {
            cfg.train.learning_rate = lr;
        }
        if self.batch_size.is_some() {
            cfg.train.batch_size = self.batch_size;
        }
        if let Some(w) = &self.widths {
            cfg.model.block_widths = w.clone();
        }
        if let Some(e) = self.embed_dim {
            cfg.model.embed_dim = e;
        }
        if let Some(t) = self.threshold {
            cfg.evaluation.threshold = t;
        }
        let seed = resolve_seed(self.seed, cfg.seed)?;
        cfg.seed = Some(seed);
        cfg.model.seed = seed;
        cfg.train.seed = seed;
        cfg.train.validate()?;
        Ok((cfg, seed))
    }
}

pub fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Flag, then config file, then the ROBIN_SEED environment variable, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> anyhow::Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var("ROBIN_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| {
            robin_core::Error::InvalidArgument(format!("ROBIN_SEED={v:?} is not an unsigned integer")).into()
        }),
        Err(_) => Ok(0),
    }
}
