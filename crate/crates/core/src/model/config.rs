use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The studied architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Robustness blocks (SE + dense) fused with one self-attention path.
    Robin,
    /// Robustness blocks without self-attention.
    Senn,
    /// Stacked self-attention layers, no dense blocks.
    Sann,
    /// Plain dense stack.
    Dnn,
    /// One hidden dense layer.
    Mlp,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Robin, Variant::Senn, Variant::Sann, Variant::Dnn, Variant::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Robin => "robin",
            Variant::Senn => "senn",
            Variant::Sann => "sann",
            Variant::Dnn => "dnn",
            Variant::Mlp => "mlp",
        }
    }

    pub fn has_se(self) -> bool {
        matches!(self, Variant::Robin | Variant::Senn)
    }

    pub fn has_attention(self) -> bool {
        matches!(self, Variant::Robin | Variant::Sann)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown variant {s:?} (expected robin, senn, sann, dnn or mlp)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub variant: Variant,
    pub input_dim: usize,
    pub block_widths: Vec<usize>,
    pub embed_dim: usize,
    pub reduction_ratio: usize,
    /// Softmax temperature of the attention scores (1 = plain `Q·Kᵀ`).
    pub attention_temperature: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Robin,
            input_dim: 31,
            block_widths: vec![64, 48, 32, 16],
            embed_dim: 8,
            reduction_ratio: 4,
            attention_temperature: 1.0,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn new(variant: Variant, input_dim: usize) -> Self {
        Self {
            variant,
            input_dim,
            ..Self::default()
        }
    }

    pub fn with_widths(mut self, widths: &[usize]) -> Self {
        self.block_widths = widths.to_vec();
        self
    }

    pub fn with_embed_dim(mut self, e: usize) -> Self {
        self.embed_dim = e;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Number of stages actually built (`mlp` always has one).
    pub fn depth(&self) -> usize {
        match self.variant {
            Variant::Mlp => 1,
            _ => self.block_widths.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::invalid("input_dim must be positive"));
        }
        if self.block_widths.is_empty() {
            return Err(Error::invalid("at least one block width is required"));
        }
        if self.block_widths.contains(&0) {
            return Err(Error::invalid("block widths must be positive"));
        }
        if self.embed_dim == 0 {
            return Err(Error::invalid("embed_dim must be positive"));
        }
        if self.reduction_ratio == 0 {
            return Err(Error::invalid("reduction_ratio must be positive"));
        }
        if !(self.attention_temperature > 0.0 && self.attention_temperature.is_finite()) {
            return Err(Error::invalid("attention_temperature must be positive"));
        }
        Ok(())
    }
}
