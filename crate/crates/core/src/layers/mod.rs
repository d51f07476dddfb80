//! Layer primitives with forward and hand-derived backward passes.
//!
//! Each layer exposes its parameters as flat blocks; `backward` returns the
//! input gradient together with one gradient vector per parameter block, in
//! the same order as [`Parameterized::params`].

mod attention;
mod dense;
mod init;
mod squeeze;

pub use attention::{AttentionCache, SelfAttention};
pub use dense::{Activation, DenseLayer};
pub use init::glorot_uniform;
pub use squeeze::{bottleneck_width, squeeze, SeForward, SqueezeExcite};

use serde::{Deserialize, Serialize};

/// Train mode reads batch statistics; eval mode reads frozen ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

pub trait Parameterized {
    fn param_names(&self) -> Vec<&'static str>;
    fn params(&self) -> Vec<&[f64]>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}
