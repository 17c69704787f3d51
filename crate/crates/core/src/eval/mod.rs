//! Evaluation metrics: multi-scale spectral distance, Fréchet distance
//! between embedding distributions, and a built-in log-mel embedder.

mod embed;
mod files;
mod frechet;
mod mss;
mod report;
pub mod stft;

pub use embed::{builtin_embedding, EMBED_BANDS, EMBED_DIM};
pub use files::{read_embeddings, read_stats, write_embeddings, write_stats};
pub use frechet::{embed_stats, frechet_distance, EmbeddingStats};
pub use mss::{mss, spectral_mse, SpectrogramScale, MSS_FFT_SIZES};
pub use report::{EvalReport, ReportRecord, RECONSTRUCTION};
