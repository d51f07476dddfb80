//! Attribute importance, attention heatmaps and hidden representations.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::model::Model;
use crate::numeric::Matrix;

/// Static per-attribute scores from the first squeeze-and-excitation layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub attributes: Vec<String>,
    pub scores: Vec<f64>,
}

impl ImportanceVector {
    /// `(attribute, score)` pairs, highest score first. Ties keep input order.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut pairs: Vec<(&str, f64)> = self
            .attributes
            .iter()
            .map(String::as_str)
            .zip(self.scores.iter().copied())
            .collect();
        pairs.sort_by(|a, b| b.1.total_cmp(&a.1));
        pairs
    }

    /// 1-based rank of `attribute` (1 = most important).
    pub fn rank_of(&self, attribute: &str) -> Option<usize> {
        self.ranked().iter().position(|(a, _)| *a == attribute).map(|p| p + 1)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "attribute,score")?;
        for (a, s) in self.attributes.iter().zip(&self.scores) {
            writeln!(out, "{a},{s}")?;
        }
        Ok(())
    }
}

/// `excite(frozen_z)` of the first SE layer. Its channels are the input
/// attributes, so the scores are named after them.
pub fn global_importance(model: &Model) -> Result<ImportanceVector> {
    let se = model.se_layers().next().ok_or_else(|| Error::MissingComponent {
        variant: model.variant().to_string(),
        component: "squeeze-and-excitation",
    })?;
    let k = model.input_dim();
    let scores = se.frozen_scores()?;
    Ok(ImportanceVector {
        attributes: model.feature_names.clone(),
        scores: scores[..k].to_vec(),
    })
}

/// Raw frozen scores of every SE layer, first layer first. Deeper layers
/// score derived features and carry no attribute names.
pub fn se_score_vectors(model: &Model) -> Result<Vec<Vec<f64>>> {
    model.se_layers().map(|se| se.frozen_scores()).collect()
}

/// Per-sample attribute interaction map: row `i` is how much attribute `i`
/// (query) attends to every attribute (key).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionHeatmap {
    pub sample: usize,
    pub attributes: Vec<String>,
    pub weights: Matrix,
}

impl AttentionHeatmap {
    /// `d × d` matrix with a header of key names and the query name leading
    /// each row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "query")?;
        for a in &self.attributes {
            write!(out, ",{a}")?;
        }
        writeln!(out)?;
        for (a, row) in self.attributes.iter().zip(self.weights.iter_rows()) {
            write!(out, "{a}")?;
            for v in row {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Grayscale rendering, `cell` pixels per entry; darker is higher
    /// relative to the largest weight.
    pub fn to_image(&self, cell: u32) -> image::GrayImage {
        let d = self.weights.rows() as u32;
        let max = self.weights.as_slice().iter().copied().fold(0.0f64, f64::max);
        let max = if max > 0.0 { max } else { 1.0 };
        image::GrayImage::from_fn(d * cell, d * cell, |x, y| {
            let v = self.weights[((y / cell) as usize, (x / cell) as usize)];
            image::Luma([(255.0 * (1.0 - v / max)).round().clamp(0.0, 255.0) as u8])
        })
    }

    /// PNG encoding of [`AttentionHeatmap::to_image`].
    pub fn png_bytes(&self, cell: u32) -> Result<Vec<u8>> {
        let mut buf = std::io::Cursor::new(Vec::new());
        self.to_image(cell)
            .write_to(&mut buf, image::ImageFormat::Png)
            .map_err(|e| Error::Data(format!("encoding heatmap {}: {e}", self.sample)))?;
        Ok(buf.into_inner())
    }
}

/// Attention map of the first self-attention layer (the one whose tokens are
/// the input attributes) for one normalized row.
pub fn attention_heatmap(model: &Model, row: &[f64], sample: usize) -> Result<AttentionHeatmap> {
    let layer = model.attention.first().ok_or_else(|| Error::MissingComponent {
        variant: model.variant().to_string(),
        component: "self-attention",
    })?;
    Ok(AttentionHeatmap {
        sample,
        attributes: model.feature_names.clone(),
        weights: layer.attention_map(row)?,
    })
}

/// Final hidden representation (the head input without any fused attention
/// path), one row per input row.
pub fn export_representations(model: &Model, x: &Matrix) -> Result<Matrix> {
    if !model.is_trained() {
        return Err(Error::NotTrained(model.variant().to_string()));
    }
    Ok(model.forward(x, Mode::Eval)?.artifacts.hidden)
}

/// `sample,label,h0,h1,…` rows.
pub fn write_representations_csv<W: Write>(reps: &Matrix, labels: &[u8], mut out: W) -> Result<()> {
    if labels.len() != reps.rows() {
        return Err(Error::invalid(format!(
            "{} representation rows vs {} labels",
            reps.rows(),
            labels.len()
        )));
    }
    write!(out, "sample,label")?;
    for j in 0..reps.cols() {
        write!(out, ",h{j}")?;
    }
    writeln!(out)?;
    for (i, row) in reps.iter_rows().enumerate() {
        write!(out, "{i},{}", labels[i])?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
