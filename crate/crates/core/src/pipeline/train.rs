use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{train_step, Adam, AdamConfig, LossReport, Transformer};
use crate::rng::SeedTree;
use crate::tokens::{MaskCoordinates, TrainingSequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub warmup_steps: usize,
    /// Cosine decay floor as a fraction of `lr`.
    pub min_lr_ratio: f64,
    /// 1 for the full objective, 0 for the ablation without the onset term.
    pub onset_weight: f64,
    pub mask_coordinates: MaskCoordinates,
    /// Length of the extracted one-shot.
    pub target_seconds: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 2000,
            batch_size: 8,
            lr: 3e-4,
            warmup_steps: 100,
            min_lr_ratio: 0.1,
            onset_weight: 1.0,
            mask_coordinates: MaskCoordinates::Delayed,
            target_seconds: 1.0,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

/// Linear warmup, then cosine decay to `min_lr_ratio * lr` at `steps`.
pub fn lr_at(cfg: &TrainConfig, step: usize) -> f64 {
    if step < cfg.warmup_steps {
        return cfg.lr * (step + 1) as f64 / cfg.warmup_steps as f64;
    }
    let span = cfg.steps.saturating_sub(cfg.warmup_steps).max(1);
    let t = ((step - cfg.warmup_steps) as f64 / span as f64).min(1.0);
    let floor = cfg.min_lr_ratio * cfg.lr;
    floor + (cfg.lr - floor) * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
}

pub struct TrainOutcome {
    pub model: Transformer<f32>,
    pub optimizer: Adam,
    /// Batch loss at every step.
    pub history: Vec<LossReport>,
}

/// Runs `cfg.steps` Adam updates over shuffled mini-batches of `data`.
/// Batches and dropout masks are drawn from `cfg.seed`, so a run is
/// reproducible.
pub fn train(
    mut model: Transformer<f32>,
    data: &[TrainingSequence],
    cfg: &TrainConfig,
    mut progress: impl FnMut(usize, &LossReport, f64),
) -> Result<TrainOutcome> {
    if data.is_empty() || cfg.batch_size == 0 {
        return Err(Error::arg("training needs data and a positive batch size"));
    }
    let root = SeedTree::new(cfg.seed).child("train");
    let mut optimizer = Adam::new(model.param_count(), cfg.adam);
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    let mut epoch = 0u64;
    let mut history = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let mut batch = Vec::with_capacity(cfg.batch_size);
        while batch.len() < cfg.batch_size.min(data.len()) {
            if cursor == order.len() {
                order = (0..data.len()).collect();
                order.shuffle(&mut root.child("epoch").index(epoch).rng());
                epoch += 1;
                cursor = 0;
            }
            batch.push(&data[order[cursor]]);
            cursor += 1;
        }
        let lr = lr_at(cfg, step);
        let dropout = Some(root.child("dropout").index(step as u64));
        let report = train_step(&mut model, &batch, &mut optimizer, lr, cfg.onset_weight, dropout)?;
        if !report.total.is_finite() {
            return Err(Error::arg(format!("loss diverged at step {step}")));
        }
        progress(step, &report, lr);
        history.push(report);
    }
    Ok(TrainOutcome { model, optimizer, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_shape() {
        let cfg = TrainConfig { steps: 100, warmup_steps: 10, lr: 1.0, min_lr_ratio: 0.1, ..Default::default() };
        assert!((lr_at(&cfg, 0) - 0.1).abs() < 1e-12);
        assert!((lr_at(&cfg, 9) - 1.0).abs() < 1e-12);
        assert!((lr_at(&cfg, 10) - 1.0).abs() < 1e-12);
        assert!((lr_at(&cfg, 100) - 0.1).abs() < 1e-12);
        assert!(lr_at(&cfg, 50) < lr_at(&cfg, 30));
    }
}
