//! End-to-end stages built on the library: tokenizing paired data, training
//! per-class extractors, extraction and test-set evaluation.

mod evaluate;
mod extract;
mod train;

pub use evaluate::{evaluate, evaluate_testset, load_eval_items, score_outputs, EvalItem, System};
pub use extract::Extractor;
pub use train::{lr_at, train, TrainConfig, TrainOutcome};

use std::path::Path;

use rayon::prelude::*;

use crate::audio::{load_wav, AudioBuffer};
use crate::codec::{Codec, CodecConfig, TokenGrid};
use crate::dataset::{ByClass, DrumClass, PairRecord, LOOP_SAMPLES};
use crate::error::Result;
use crate::model::ModelConfig;
use crate::tokens::{build_training_sequence, MaskCoordinates, TrainingSequence};

/// Frames covering `seconds` at the codec frame rate.
pub fn frames_for_seconds(codec: &CodecConfig, seconds: f64) -> usize {
    (seconds * codec.frame_rate as f64).round().max(1.0) as usize
}

/// Mixture frames of a four-second loop.
pub fn mixture_frames(codec: &CodecConfig) -> usize {
    codec.frames_for(LOOP_SAMPLES)
}

/// Zero-pads or truncates a mono signal to exactly `len` samples.
pub fn fit_length(x: &AudioBuffer, len: usize) -> AudioBuffer {
    let mono = x.to_mono();
    let mut s = mono.channel(0).to_vec();
    s.resize(len, 0.0);
    AudioBuffer::mono(s)
}

/// Model config with K, N and the step budget taken from the codec and the
/// sequence lengths.
pub fn fit_model_config(base: ModelConfig, codec: &CodecConfig, cond_frames: usize, target_frames: usize) -> ModelConfig {
    let mut c = ModelConfig { codebooks: codec.codebooks, codebook_size: codec.codebook_size, ..base };
    c.max_steps = c.sequence_steps(cond_frames, target_frames);
    c
}

/// Token grids of one pair: the downmixed mixture and each class's one-shot
/// fitted to the target length.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedPair {
    pub mixture: TokenGrid,
    pub targets: ByClass<TokenGrid>,
}

pub fn tokenize_pair(
    codec: &Codec,
    mixture: &AudioBuffer,
    oneshots: &ByClass<AudioBuffer>,
    target_frames: usize,
) -> Result<TokenizedPair> {
    let cfg = codec.config();
    let mix = fit_length(mixture, mixture_frames(cfg) * cfg.hop());
    let target_len = target_frames * cfg.hop();
    Ok(TokenizedPair {
        mixture: codec.encode(&mix)?,
        targets: ByClass::try_from_fn(|c| codec.encode(&fit_length(&oneshots[c], target_len)))?,
    })
}

/// Loads and tokenizes every record of a dataset directory.
pub fn tokenize_records(
    dir: &Path,
    records: &[PairRecord],
    codec: &Codec,
    target_frames: usize,
) -> Result<Vec<TokenizedPair>> {
    records
        .par_iter()
        .map(|r| {
            let mixture = load_wav(dir.join(&r.mixture))?;
            let oneshots = ByClass::try_from_fn(|c| load_wav(dir.join(&r.oneshots[c])))?;
            tokenize_pair(codec, &mixture, &oneshots, target_frames)
        })
        .collect()
}

/// Training sequences for one drum class.
pub fn class_sequences(
    pairs: &[TokenizedPair],
    class: DrumClass,
    coords: MaskCoordinates,
) -> Result<Vec<TrainingSequence>> {
    pairs
        .iter()
        .map(|p| build_training_sequence(&p.mixture, &p.targets[class], coords))
        .collect()
}
