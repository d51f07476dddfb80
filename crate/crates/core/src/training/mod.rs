//! Loss, optimizers and the training loop.

mod loss;
mod optim;
mod trainer;

pub use loss::{bce_grad_logits, bce_loss};
pub use optim::{adam_step, sgd_step, AdamParams, AdamState, OptimizerKind};
pub use trainer::{check_model_gradients, model_loss, train, write_loss_csv, TrainConfig};
