use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::layers::{
    Activation, AttentionCache, DenseLayer, Mode, Parameterized, SeForward, SelfAttention, SqueezeExcite,
};
use crate::model::{ModelConfig, Variant};
use crate::numeric::{sigmoid_scalar, Matrix};
use crate::rng::{rng_from, streams};

const DEFAULT_EMA_BETA: f64 = 0.9;

/// One stage of the main stream: optional squeeze-and-excitation over the
/// stage input, followed by a ReLU dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub se: Option<SqueezeExcite>,
    pub dense: DenseLayer,
}

/// A classifier of any [`Variant`]. Untrained until its SE statistics are
/// frozen by the trainer (variants without SE are usable immediately).
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub feature_names: Vec<String>,
    /// Training-split normalization, kept so raw data can be scored later.
    pub norm_stats: Option<NormStats>,
    /// One layer for robin, `L` stacked layers for sann, none otherwise.
    pub attention: Vec<SelfAttention>,
    pub blocks: Vec<Block>,
    /// Produces the logit; the probability is `σ(logit)`.
    pub head: DenseLayer,
    pub train_log: Vec<f64>,
}

/// What a forward pass exposes besides probabilities.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    /// Per attention layer, one `d × d` map per sample.
    pub attention_maps: Vec<Vec<Matrix>>,
    /// Per SE layer, the importance scores that were applied.
    pub se_scores: Vec<Vec<f64>>,
    /// Per SE layer, the descriptor the scores were computed from (batch mean
    /// in train mode, frozen statistics in eval mode).
    pub se_descriptors: Vec<Vec<f64>>,
    /// Final hidden representation fed to the head (without the fused
    /// attention path).
    pub hidden: Matrix,
}

#[derive(Debug, Clone)]
pub struct Forward {
    pub probs: Vec<f64>,
    pub logits: Vec<f64>,
    pub artifacts: Artifacts,
    mode: Mode,
    input: Matrix,
    attention_inputs: Vec<Matrix>,
    attention_caches: Vec<Vec<AttentionCache>>,
    block_inputs: Vec<Matrix>,
    se_forwards: Vec<Option<SeForward>>,
    dense_inputs: Vec<Matrix>,
    dense_outputs: Vec<Matrix>,
    head_input: Matrix,
}

impl Model {
    /// Builds an untrained model with seeded initialization.
    pub fn build(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_from(config.seed, streams::INIT);
        let k = config.input_dim;
        let widths = &config.block_widths[..config.depth()];
        let fuse = config.variant == Variant::Robin;

        let attention = match config.variant {
            Variant::Robin => vec![SelfAttention::new(
                k,
                config.embed_dim,
                config.attention_temperature,
                &mut rng,
            )],
            Variant::Sann => (0..widths.len())
                .map(|_| SelfAttention::new(k, config.embed_dim, config.attention_temperature, &mut rng))
                .collect(),
            _ => Vec::new(),
        };

        let mut blocks = Vec::new();
        let mut width = k;
        if config.variant != Variant::Sann {
            for (l, &w) in widths.iter().enumerate() {
                let in_dim = if fuse && l > 0 { width + k } else { width };
                let se = config
                    .variant
                    .has_se()
                    .then(|| SqueezeExcite::new(in_dim, config.reduction_ratio, DEFAULT_EMA_BETA, &mut rng));
                let dense = DenseLayer::new(in_dim, w, Activation::Relu, &mut rng);
                blocks.push(Block { se, dense });
                width = w;
            }
        }
        let head_in = if fuse { width + k } else { width };
        let head = DenseLayer::new(head_in, 1, Activation::None, &mut rng);

        Ok(Self {
            feature_names: (0..k).map(|j| format!("x{j}")).collect(),
            config,
            norm_stats: None,
            attention,
            blocks,
            head,
            train_log: Vec::new(),
        })
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn se_layers(&self) -> impl Iterator<Item = &SqueezeExcite> {
        self.blocks.iter().filter_map(|b| b.se.as_ref())
    }

    pub fn se_layers_mut(&mut self) -> impl Iterator<Item = &mut SqueezeExcite> {
        self.blocks.iter_mut().filter_map(|b| b.se.as_mut())
    }

    /// True once every SE layer carries frozen statistics.
    pub fn is_trained(&self) -> bool {
        self.se_layers().all(|se| se.frozen_z.is_some())
    }

    fn fuses_attention(&self) -> bool {
        self.config.variant == Variant::Robin
    }

    pub fn forward(&self, x: &Matrix, mode: Mode) -> Result<Forward> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape {
                op: "model_forward",
                left: x.shape(),
                right: (x.rows(), self.input_dim()),
            });
        }
        let mut artifacts = Artifacts::default();
        let mut attention_inputs = Vec::new();
        let mut attention_caches = Vec::new();
        let mut attention_out = None;
        let mut h = x.clone();

        match self.config.variant {
            Variant::Robin => {
                let (out, caches) = self.attention[0].forward_cached(x)?;
                artifacts
                    .attention_maps
                    .push(caches.iter().map(|c| c.attention.clone()).collect());
                attention_inputs.push(x.clone());
                attention_caches.push(caches);
                attention_out = Some(out);
            }
            Variant::Sann => {
                for layer in &self.attention {
                    let (out, caches) = layer.forward_cached(&h)?;
                    artifacts
                        .attention_maps
                        .push(caches.iter().map(|c| c.attention.clone()).collect());
                    attention_inputs.push(std::mem::replace(&mut h, out));
                    attention_caches.push(caches);
                }
            }
            _ => {}
        }

        let mut block_inputs = Vec::with_capacity(self.blocks.len());
        let mut se_forwards = Vec::with_capacity(self.blocks.len());
        let mut dense_inputs = Vec::with_capacity(self.blocks.len());
        let mut dense_outputs = Vec::with_capacity(self.blocks.len());
        for (l, block) in self.blocks.iter().enumerate() {
            let input = match (&attention_out, l) {
                (Some(sa), l) if l > 0 => h.concat_cols(sa)?,
                _ => h,
            };
            let (dense_in, se_fwd) = match &block.se {
                Some(se) => {
                    let f = se.forward(&input, mode)?;
                    artifacts.se_scores.push(f.scores.clone());
                    artifacts.se_descriptors.push(f.descriptor.clone());
                    (f.output.clone(), Some(f))
                }
                None => (input.clone(), None),
            };
            let out = block.dense.forward(&dense_in)?;
            h = out.clone();
            block_inputs.push(input);
            se_forwards.push(se_fwd);
            dense_inputs.push(dense_in);
            dense_outputs.push(out);
        }

        artifacts.hidden = h.clone();
        let head_input = match &attention_out {
            Some(sa) => h.concat_cols(sa)?,
            None => h,
        };
        let logits = self.head.forward(&head_input)?.into_vec();
        let probs = logits.iter().map(|&z| sigmoid_scalar(z)).collect();

        Ok(Forward {
            probs,
            logits,
            artifacts,
            mode,
            input: x.clone(),
            attention_inputs,
            attention_caches,
            block_inputs,
            se_forwards,
            dense_inputs,
            dense_outputs,
            head_input,
        })
    }

    /// Gradients of a loss with respect to every parameter block, given the
    /// loss gradient with respect to the logits. Ordered as [`Model::params`].
    pub fn backward(&self, fwd: &Forward, grad_logits: &[f64]) -> Result<Vec<Vec<f64>>> {
        if grad_logits.len() != fwd.logits.len() {
            return Err(Error::Shape {
                op: "model_backward",
                left: (fwd.logits.len(), 1),
                right: (grad_logits.len(), 1),
            });
        }
        let k = self.input_dim();
        let fuse = self.fuses_attention();
        let n = fwd.input.rows();

        let head_out = Matrix::column_vector(&fwd.logits);
        let (grad_head_in, head_grads) =
            self.head
                .backward(&fwd.head_input, &head_out, &Matrix::column_vector(grad_logits))?;

        let mut grad_sa = fuse.then(|| Matrix::zeros(n, k));
        let mut grad_h = match &mut grad_sa {
            Some(acc) => {
                let width = grad_head_in.cols() - k;
                let (gh, gs) = grad_head_in.split_cols(width)?;
                acc.add_assign(&gs)?;
                gh
            }
            None => grad_head_in,
        };

        let mut block_grads = Vec::with_capacity(self.blocks.len());
        for (l, block) in self.blocks.iter().enumerate().rev() {
            let (grad_dense_in, dense_grads) =
                block
                    .dense
                    .backward(&fwd.dense_inputs[l], &fwd.dense_outputs[l], &grad_h)?;
            let (grad_input, se_grads) = match (&block.se, &fwd.se_forwards[l]) {
                (Some(se), Some(sf)) => {
                    let (g, grads) = se.backward(&fwd.block_inputs[l], sf, &grad_dense_in, fwd.mode)?;
                    (g, Some(grads))
                }
                _ => (grad_dense_in, None),
            };
            grad_h = match &mut grad_sa {
                Some(acc) if l > 0 => {
                    let width = grad_input.cols() - k;
                    let (gh, gs) = grad_input.split_cols(width)?;
                    acc.add_assign(&gs)?;
                    gh
                }
                _ => grad_input,
            };
            block_grads.push((se_grads, dense_grads));
        }
        block_grads.reverse();

        let mut attention_grads = Vec::with_capacity(self.attention.len());
        match self.config.variant {
            Variant::Robin => {
                let g = grad_sa.expect("robin fuses attention");
                let (_, grads) = self.attention[0].backward(&fwd.attention_inputs[0], &fwd.attention_caches[0], &g)?;
                attention_grads.push(grads);
            }
            Variant::Sann => {
                for (i, layer) in self.attention.iter().enumerate().rev() {
                    let (g, grads) = layer.backward(&fwd.attention_inputs[i], &fwd.attention_caches[i], &grad_h)?;
                    grad_h = g;
                    attention_grads.push(grads);
                }
                attention_grads.reverse();
            }
            _ => {}
        }

        let mut out = Vec::new();
        for grads in attention_grads {
            out.extend(grads);
        }
        for (se, dense) in block_grads {
            if let Some(se) = se {
                out.extend(se);
            }
            out.extend(dense);
        }
        out.extend(head_grads);
        Ok(out)
    }

    /// Eval-mode probabilities.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.forward(x, Mode::Eval)?.probs)
    }

    /// Parameter block names, e.g. `block1.se.w1`, in gradient order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, layer) in self.attention.iter().enumerate() {
            names.extend(layer.param_names().into_iter().map(|p| format!("attention{i}.{p}")));
        }
        for (l, block) in self.blocks.iter().enumerate() {
            if let Some(se) = &block.se {
                names.extend(se.param_names().into_iter().map(|p| format!("block{l}.se.{p}")));
            }
            names.extend(
                block
                    .dense
                    .param_names()
                    .into_iter()
                    .map(|p| format!("block{l}.dense.{p}")),
            );
        }
        names.extend(self.head.param_names().into_iter().map(|p| format!("head.{p}")));
        names
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.attention {
            out.extend(layer.params());
        }
        for block in &self.blocks {
            if let Some(se) = &block.se {
                out.extend(se.params());
            }
            out.extend(block.dense.params());
        }
        out.extend(self.head.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.attention {
            out.extend(layer.params_mut());
        }
        for block in &mut self.blocks {
            if let Some(se) = &mut block.se {
                out.extend(se.params_mut());
            }
            out.extend(block.dense.params_mut());
        }
        out.extend(self.head.params_mut());
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

/// Label 1 iff `prob >= threshold`.
pub fn predict(probs: &[f64], threshold: f64) -> Vec<u8> {
    probs.iter().map(|&p| u8::from(p >= threshold)).collect()
}
