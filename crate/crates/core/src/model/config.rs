use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokens::vocab_size;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    /// Longest sequence (in steps) the positional table covers.
    pub max_steps: usize,
    /// K: parallel codebook streams.
    pub codebooks: usize,
    /// N: data tokens per codebook; the head vocabulary is N + 2.
    pub codebook_size: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 128,
            n_layers: 4,
            n_heads: 4,
            d_ff: 512,
            // 4 s prefix + SEP + 1 s target at 100 frames/s with K = 4.
            max_steps: 512,
            codebooks: 4,
            codebook_size: 256,
            dropout: 0.1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn vocab(&self) -> usize {
        vocab_size(self.codebook_size)
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::arg(format!(
                "d_model {} must be a positive multiple of n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.n_layers == 0 || self.d_ff == 0 || self.max_steps == 0 {
            return Err(Error::arg("n_layers, d_ff and max_steps must be positive"));
        }
        if self.codebooks == 0 || self.codebook_size == 0 {
            return Err(Error::arg("need K >= 1 and N >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::arg("dropout must be in [0, 1)"));
        }
        Ok(())
    }

    /// Steps of a sequence with `cond_frames` mixture frames and
    /// `target_frames` target frames.
    pub fn sequence_steps(&self, cond_frames: usize, target_frames: usize) -> usize {
        cond_frames + target_frames + 2 * (self.codebooks - 1) + 1
    }
}
