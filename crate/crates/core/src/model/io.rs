//! Versioned JSON model files. Every stored `f64` is written as the 16-digit
//! hex of its IEEE-754 bits so a save/load cycle is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};

pub const MODEL_FORMAT: &str = "robin-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

fn encode(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| format!("{:016x}", v.to_bits())).collect()
}

fn decode(values: &[String]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|s| {
            u64::from_str_radix(s, 16)
                .map(f64::from_bits)
                .map_err(|_| Error::Data(format!("invalid hex float {s:?}")))
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamRecord {
    name: String,
    values: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NormRecord {
    min: Vec<String>,
    max: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SeStateRecord {
    ema_beta: String,
    frozen_z: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: ModelConfig,
    feature_names: Vec<String>,
    norm_stats: Option<NormRecord>,
    parameters: Vec<ParamRecord>,
    se_state: Vec<SeStateRecord>,
    train_log: Vec<String>,
}

impl Model {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            config: self.config.clone(),
            feature_names: self.feature_names.clone(),
            norm_stats: self.norm_stats.as_ref().map(|s| NormRecord {
                min: encode(&s.min),
                max: encode(&s.max),
            }),
            parameters: self
                .param_names()
                .into_iter()
                .zip(self.params())
                .map(|(name, values)| ParamRecord {
                    name,
                    values: encode(values),
                })
                .collect(),
            se_state: self
                .se_layers()
                .map(|se| SeStateRecord {
                    ema_beta: format!("{:016x}", se.ema_beta.to_bits()),
                    frozen_z: se.frozen_z.as_deref().map(encode),
                })
                .collect(),
            train_log: encode(&self.train_log),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Data(format!("not a model file (format {:?})", file.format)));
        }
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!("unsupported model version {}", file.version)));
        }
        let mut model = Model::build(file.config)?;
        if file.feature_names.len() != model.input_dim() {
            return Err(Error::Data("feature name count does not match input_dim".into()));
        }
        model.feature_names = file.feature_names;

        let names = model.param_names();
        if names.len() != file.parameters.len() {
            return Err(Error::Data(format!(
                "expected {} parameter blocks, found {}",
                names.len(),
                file.parameters.len()
            )));
        }
        for ((name, slot), record) in names.iter().zip(model.params_mut()).zip(&file.parameters) {
            if *name != record.name || slot.len() != record.values.len() {
                return Err(Error::Data(format!(
                    "parameter block {} does not match architecture",
                    record.name
                )));
            }
            slot.copy_from_slice(&decode(&record.values)?);
        }

        let se_count = model.se_layers().count();
        if se_count != file.se_state.len() {
            return Err(Error::Data("SE state count does not match architecture".into()));
        }
        for (se, state) in model.se_layers_mut().zip(&file.se_state) {
            se.ema_beta = decode(std::slice::from_ref(&state.ema_beta))?[0];
            se.frozen_z = state.frozen_z.as_deref().map(decode).transpose()?;
        }
        model.norm_stats = file
            .norm_stats
            .map(|n| -> Result<NormStats> {
                Ok(NormStats {
                    min: decode(&n.min)?,
                    max: decode(&n.max)?,
                })
            })
            .transpose()?;
        model.train_log = decode(&file.train_log)?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
