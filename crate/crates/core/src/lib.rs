//! Drum one-shot extraction from music mixtures.
//!
//! The crate covers the whole pipeline: procedural generation of paired
//! (mixture, one-shot) data, a residual-VQ token codec, token-sequence
//! layout with the codebook delay pattern and onset mask, a decoder-only
//! transformer trained on full-length plus onset cross-entropy, and the
//! evaluation metrics (multi-scale spectral distance, Fréchet distance).

pub mod audio;
pub mod codec;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod tokens;

pub use audio::{AudioBuffer, SAMPLE_RATE};
pub use codec::{Codec, CodecConfig, TokenGrid};
pub use dataset::{ByClass, DrumClass, DrumPattern, Instrument, MixturePair};
pub use error::{Error, Result};
pub use rng::SeedTree;
