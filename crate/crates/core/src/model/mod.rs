//! Decoder-only transformer over codec tokens: K summed token embeddings per
//! step, causal self-attention, K next-step heads; trained on full-length
//! plus onset cross-entropy.

mod checkpoint;
mod config;
mod generate;
mod loss;
mod optim;
mod params;
mod real;
mod transformer;

pub use checkpoint::{Checkpoint, CheckpointMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::ModelConfig;
pub use generate::Sampling;
pub use loss::{log_softmax_at, LossReport};
pub use optim::{Adam, AdamConfig};
pub use params::{init_params, param_count, LayerOffsets, ParamLayout};
pub use real::Real;
pub use transformer::Transformer;

use crate::error::Result;
use crate::rng::SeedTree;
use crate::tokens::TrainingSequence;

/// One optimizer update on the mean total loss of `batch`.
pub fn train_step<T: Real>(
    model: &mut Transformer<T>,
    batch: &[&TrainingSequence],
    optimizer: &mut Adam,
    lr: f64,
    onset_weight: f64,
    dropout: Option<SeedTree>,
) -> Result<LossReport> {
    let (report, grad) = model.batch_loss_and_grad(batch, onset_weight, dropout)?;
    optimizer.step(model.params_mut(), &grad, lr);
    Ok(report)
}
