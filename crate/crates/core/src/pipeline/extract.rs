use crate::audio::AudioBuffer;
use crate::codec::{Codec, TokenGrid};
use crate::dataset::DrumClass;
use crate::error::Result;
use crate::model::{Checkpoint, Sampling};
use crate::rng::Rng;

use super::fit_length;

/// A trained per-class model together with its codec.
pub struct Extractor {
    pub codec: Codec,
    pub checkpoint: Checkpoint,
}

impl Extractor {
    pub fn new(checkpoint: Checkpoint) -> Result<Self> {
        Ok(Extractor { codec: Codec::new(checkpoint.meta.codec)?, checkpoint })
    }

    pub fn class(&self) -> Option<DrumClass> {
        self.checkpoint.meta.class
    }

    pub fn target_samples(&self) -> usize {
        self.checkpoint.meta.target_frames * self.codec.config().hop()
    }

    /// Mixture tokens as the model sees them: mono, fitted to the
    /// conditioning length.
    pub fn encode_mixture(&self, mixture: &AudioBuffer) -> Result<TokenGrid> {
        let len = self.checkpoint.meta.cond_frames * self.codec.config().hop();
        self.codec.encode(&fit_length(mixture, len))
    }

    pub fn extract_tokens(&self, q_mix: &TokenGrid, sampling: Sampling, rng: &mut Rng) -> Result<TokenGrid> {
        self.checkpoint.model.generate(q_mix, self.checkpoint.meta.target_frames, sampling, rng)
    }

    /// Mixture in, one-shot out (mono, `target_samples` long).
    pub fn extract(&self, mixture: &AudioBuffer, sampling: Sampling, rng: &mut Rng) -> Result<AudioBuffer> {
        let q = self.extract_tokens(&self.encode_mixture(mixture)?, sampling, rng)?;
        self.codec.decode(&q)
    }
}
