//! The five architectures behind one classifier type.

mod config;
mod io;
mod network;

pub use config::{ModelConfig, Variant};
pub use io::{MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use network::{predict, Artifacts, Block, Forward, Model};

/// A model whose SE statistics have been frozen by training.
pub type TrainedModel = Model;
