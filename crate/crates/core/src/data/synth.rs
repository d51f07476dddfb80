//! Schema-faithful synthetic patients.
//!
//! Labels are drawn first. Each categorical attribute is then sampled from a
//! label-conditioned distribution `p_y(c) ∝ w(c) · exp(±β(c)/2)` where `w` are
//! base weights and `β` the planted coefficients (zero for attributes outside
//! the planted set). The resulting posterior log-odds are a sum of per-attribute
//! terms, i.e. a noisy logistic rule over the planted attributes.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, RawTable, Schema};
use crate::error::{Error, Result};
use crate::rng::{rng_from, streams};

const DEFAULT_GENERATOR: &str = include_str!("../../assets/generator.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryWeights {
    pub name: String,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTerm {
    pub name: String,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub version: u32,
    pub numeric: Vec<NumericRange>,
    pub categorical: Vec<CategoryWeights>,
    pub planted: Vec<PlantedTerm>,
}

impl GeneratorConfig {
    pub fn bundled() -> Self {
        serde_json::from_str(DEFAULT_GENERATOR).expect("bundled generator config is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn planted_names(&self) -> Vec<&str> {
        self.planted.iter().map(|p| p.name.as_str()).collect()
    }

    /// Per-label category probabilities for `name`: `(negative, positive)`.
    pub fn conditional_probabilities(&self, name: &str) -> Option<(Vec<f64>, Vec<f64>)> {
        let base = self.categorical.iter().find(|c| c.name == name)?;
        let coefs = self
            .planted
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.coefficients.clone())
            .unwrap_or_else(|| vec![0.0; base.weights.len()]);
        let conditioned = |sign: f64| {
            let w: Vec<f64> = base
                .weights
                .iter()
                .zip(&coefs)
                .map(|(w, b)| w * (sign * b / 2.0).exp())
                .collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect::<Vec<_>>()
        };
        Some((conditioned(-1.0), conditioned(1.0)))
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        for attr in &schema.attributes {
            if attr.name == schema.target {
                continue;
            }
            match attr.kind {
                AttributeKind::Numeric => {
                    let r = self
                        .numeric
                        .iter()
                        .find(|n| n.name == attr.name)
                        .ok_or_else(|| Error::Data(format!("generator lacks range for {}", attr.name)))?;
                    if r.min.is_nan() || r.max.is_nan() || r.min > r.max {
                        return Err(Error::Data(format!("empty range for {}", attr.name)));
                    }
                }
                AttributeKind::Categorical => {
                    let c = self
                        .categorical
                        .iter()
                        .find(|c| c.name == attr.name)
                        .ok_or_else(|| Error::Data(format!("generator lacks weights for {}", attr.name)))?;
                    if c.weights.len() != attr.categories.len()
                        || c.weights.iter().any(|w| w.is_nan() || *w < 0.0)
                        || c.weights.iter().sum::<f64>() <= 0.0
                    {
                        return Err(Error::Data(format!("bad weights for {}", attr.name)));
                    }
                }
            }
        }
        for p in &self.planted {
            let attr = schema
                .attribute(&p.name)
                .ok_or_else(|| Error::Data(format!("planted attribute {} not in schema", p.name)))?;
            if p.coefficients.len() != attr.categories.len() {
                return Err(Error::Data(format!(
                    "planted coefficients for {} have wrong length",
                    p.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub seed: u64,
    pub n: usize,
    pub positive_fraction: f64,
    pub missing_rate: f64,
    /// Use exactly `round(n · positive_fraction)` positives instead of
    /// independent Bernoulli draws.
    pub exact_count: bool,
}

impl SynthOptions {
    /// 151 patients, 97 of them positive, no missing cells.
    pub fn new(seed: u64, n: usize) -> Self {
        Self {
            seed,
            n,
            positive_fraction: 97.0 / 151.0,
            missing_rate: 0.0,
            exact_count: false,
        }
    }

    pub fn with_missing_rate(mut self, rate: f64) -> Self {
        self.missing_rate = rate;
        self
    }

    pub fn with_positive_fraction(mut self, fraction: f64) -> Self {
        self.positive_fraction = fraction;
        self
    }

    pub fn exact(mut self) -> Self {
        self.exact_count = true;
        self
    }
}

/// Generates a raw table with the bundled generator config.
pub fn synth_generate(opts: &SynthOptions, schema: &Schema) -> Result<RawTable> {
    synth_generate_with(opts, schema, &GeneratorConfig::bundled())
}

pub fn synth_generate_with(opts: &SynthOptions, schema: &Schema, config: &GeneratorConfig) -> Result<RawTable> {
    if opts.n < 2 {
        return Err(Error::invalid(format!("n must be at least 2, got {}", opts.n)));
    }
    if !(opts.positive_fraction > 0.0 && opts.positive_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "positive fraction must lie in (0, 1), got {}",
            opts.positive_fraction
        )));
    }
    if !(opts.missing_rate >= 0.0 && opts.missing_rate < 1.0) {
        return Err(Error::invalid(format!(
            "missing rate must lie in [0, 1), got {}",
            opts.missing_rate
        )));
    }
    config.validate(schema)?;
    let target = schema.target_attribute()?;

    let labels: Vec<u8> = {
        let mut rng = rng_from(opts.seed, streams::SYNTH_LABELS);
        if opts.exact_count {
            let positives = (opts.n as f64 * opts.positive_fraction).round() as usize;
            let mut l: Vec<u8> = (0..opts.n).map(|i| u8::from(i < positives)).collect();
            l.shuffle(&mut rng);
            l
        } else {
            (0..opts.n)
                .map(|_| u8::from(rng.random_bool(opts.positive_fraction)))
                .collect()
        }
    };

    enum Sampler<'a> {
        Numeric(&'a NumericRange),
        Categorical([WeightedIndex<f64>; 2], &'a [String]),
        Target,
    }
    let samplers = schema
        .attributes
        .iter()
        .map(|attr| {
            if attr.name == target.name {
                return Ok(Sampler::Target);
            }
            Ok(match attr.kind {
                AttributeKind::Numeric => {
                    Sampler::Numeric(config.numeric.iter().find(|r| r.name == attr.name).expect("validated"))
                }
                AttributeKind::Categorical => {
                    let (neg, pos) = config.conditional_probabilities(&attr.name).expect("validated");
                    let dist =
                        |p: Vec<f64>| WeightedIndex::new(p).map_err(|e| Error::Data(format!("{}: {e}", attr.name)));
                    Sampler::Categorical([dist(neg)?, dist(pos)?], &attr.categories)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = rng_from(opts.seed, streams::SYNTH_CELLS);
    let mut blanks = rng_from(opts.seed, streams::SYNTH_MISSING);
    let rows = labels
        .iter()
        .map(|&y| {
            samplers
                .iter()
                .map(|s| match s {
                    Sampler::Target => target.categories[y as usize].clone(),
                    Sampler::Numeric(r) => {
                        let v = cells.random_range(r.min.round() as i64..=r.max.round() as i64);
                        if blanks.random_bool(opts.missing_rate) {
                            String::new()
                        } else {
                            v.to_string()
                        }
                    }
                    Sampler::Categorical(dists, cats) => {
                        let idx = dists[y as usize].sample(&mut cells);
                        if blanks.random_bool(opts.missing_rate) {
                            String::new()
                        } else {
                            cats[idx].clone()
                        }
                    }
                })
                .collect()
        })
        .collect();

    Ok(RawTable {
        columns: schema.attributes.iter().map(|a| a.name.clone()).collect(),
        rows,
    })
}
