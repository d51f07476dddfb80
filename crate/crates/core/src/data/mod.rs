//! Attribute schema, encoding, normalization, CSV ingestion and the synthetic
//! patient generator.

mod dataset;
mod encode;
mod schema;
mod synth;
mod table;

pub use dataset::{Dataset, NormStats, MISSING_CODE};
pub use encode::{is_missing, label_encode, MISSING_TOKENS};
pub use schema::{AttributeKind, AttributeSchema, Schema};
pub use synth::{
    synth_generate, synth_generate_with, CategoryWeights, GeneratorConfig, NumericRange, PlantedTerm, SynthOptions,
};
pub use table::{load_csv, read_csv, RawTable};
