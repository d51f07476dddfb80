//! RobIn: a tabular binary classifier that fuses squeeze-and-excitation
//! (static, per-attribute importance) with self-attention (per-sample
//! attribute interactions), plus the data pipeline, training loop, evaluation
//! protocols, stress tests and interpretability exports around it.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod interpret;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod stress;
pub mod training;

pub use data::{Dataset, NormStats, Schema};
pub use error::{Error, Result};
pub use model::{Model, ModelConfig, TrainedModel, Variant};
pub use numeric::Matrix;
pub use training::TrainConfig;
