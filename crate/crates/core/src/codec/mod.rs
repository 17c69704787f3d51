//! Toy residual-vector-quantization codec.
//!
//! Each frame of `hop` samples is projected onto `latent_dim` orthonormal
//! analysis rows, then quantized by `K` residual stages of `N` codewords.
//! Decoding sums the chosen codewords and back-projects with the transposed
//! analysis matrix.
//!
//! Codebook construction: codeword 1 of every stage is the zero vector and
//! the rest lie on a sphere of radius `r_k`. The radius of stage `k+1` is
//! chosen so that all later stages together reach less than half of stage
//! `k`'s minimum codeword spacing. Consequences:
//! - the residual norm never increases across stages (zero is always a
//!   candidate);
//! - re-quantizing a decoded latent returns the same indices.

mod tokenfile;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use tokenfile::{read_tokens, write_tokens, TOKEN_MAGIC};

use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::rng::SeedTree;

const BASE_RADIUS: f64 = 2.0;
const RADIUS_SHRINK: f64 = 0.24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodecConfig {
    /// K: number of residual stages (codebooks).
    pub codebooks: usize,
    /// N: codewords per codebook.
    pub codebook_size: usize,
    /// Frames per second; must divide 44100.
    pub frame_rate: u32,
    pub latent_dim: usize,
    pub seed: u64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            codebooks: 4,
            codebook_size: 256,
            frame_rate: 100,
            latent_dim: 32,
            seed: 0,
        }
    }
}

impl CodecConfig {
    pub fn hop(&self) -> usize {
        (SAMPLE_RATE / self.frame_rate) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.codebooks < 1 {
            return Err(Error::arg("codec needs at least one codebook"));
        }
        if self.codebook_size < 2 {
            return Err(Error::arg("codebook size must be at least 2"));
        }
        // Two extra vocabulary slots (PAD, SEP) must fit in u16.
        if self.codebook_size + 2 > u16::MAX as usize {
            return Err(Error::arg("codebook size too large for 16-bit tokens"));
        }
        if self.frame_rate == 0 || !SAMPLE_RATE.is_multiple_of(self.frame_rate) {
            return Err(Error::arg(format!(
                "frame rate {} does not divide {SAMPLE_RATE}",
                self.frame_rate
            )));
        }
        if self.latent_dim == 0 || self.latent_dim > self.hop() {
            return Err(Error::arg("latent_dim must be in 1..=hop"));
        }
        Ok(())
    }

    /// Frames covering `samples` samples (the tail frame is zero-padded).
    pub fn frames_for(&self, samples: usize) -> usize {
        samples.div_ceil(self.hop())
    }
}

/// Discrete code: `frames × K` matrix over `1..=N`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenGrid {
    frames: usize,
    codebooks: usize,
    codebook_size: usize,
    frame_rate: u32,
    data: Vec<u16>,
}

impl TokenGrid {
    pub fn new(
        frames: usize,
        codebooks: usize,
        codebook_size: usize,
        frame_rate: u32,
        data: Vec<u16>,
    ) -> Result<Self> {
        if data.len() != frames * codebooks {
            return Err(Error::arg(format!(
                "token grid of {frames}x{codebooks} needs {} entries, got {}",
                frames * codebooks,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|&&v| v == 0 || v as usize > codebook_size) {
            return Err(Error::corrupt(format!("token {bad} outside 1..={codebook_size}")));
        }
        Ok(TokenGrid {
            frames,
            codebooks,
            codebook_size,
            frame_rate,
            data,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn codebooks(&self) -> usize {
        self.codebooks
    }

    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    pub fn frame_rate(&self) -> u32 {
        self.frame_rate
    }

    /// Token at 0-based frame `t`, codebook `k`.
    pub fn get(&self, t: usize, k: usize) -> u16 {
        self.data[t * self.codebooks + k]
    }

    pub fn frame(&self, t: usize) -> &[u16] {
        &self.data[t * self.codebooks..(t + 1) * self.codebooks]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.data
    }

    /// First `frames` frames; fails if fewer are available.
    pub fn truncated(&self, frames: usize) -> Result<TokenGrid> {
        if frames > self.frames {
            return Err(Error::arg("cannot truncate to more frames"));
        }
        TokenGrid::new(
            frames,
            self.codebooks,
            self.codebook_size,
            self.frame_rate,
            self.data[..frames * self.codebooks].to_vec(),
        )
    }
}

/// Frozen codec built deterministically from a [`CodecConfig`].
#[derive(Debug, Clone)]
pub struct Codec {
    config: CodecConfig,
    /// latent_dim × hop, row-major, orthonormal rows.
    analysis: Vec<f32>,
    /// K × N × latent_dim.
    codebooks: Vec<f32>,
    codeword_norms: Vec<f32>,
    radii: Vec<f64>,
}

impl Codec {
    pub fn new(config: CodecConfig) -> Result<Self> {
        config.validate()?;
        let root = SeedTree::new(config.seed).child("codec");
        let analysis = analysis_matrix(config.hop(), config.latent_dim, root.child("analysis"));
        let (codebooks, radii) = build_codebooks(&config, root.child("codebooks"));
        let d = config.latent_dim;
        let codeword_norms = codebooks
            .chunks_exact(d)
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect();
        Ok(Codec {
            config,
            analysis,
            codebooks,
            codeword_norms,
            radii,
        })
    }

    pub fn config(&self) -> &CodecConfig {
        &self.config
    }

    pub fn analysis_matrix(&self) -> &[f32] {
        &self.analysis
    }

    pub fn stage_radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn codeword(&self, stage: usize, token: u16) -> &[f32] {
        let d = self.config.latent_dim;
        let n = self.config.codebook_size;
        let off = (stage * n + (token as usize - 1)) * d;
        &self.codebooks[off..off + d]
    }

    pub fn project(&self, frame: &[f32]) -> Vec<f32> {
        let hop = self.config.hop();
        self.analysis
            .chunks_exact(hop)
            .map(|row| row.iter().zip(frame).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Greedy residual quantization of one latent. Returns 1-based tokens and
    /// the residual norm after each stage.
    pub fn quantize_latent(&self, latent: &[f32]) -> (Vec<u16>, Vec<f32>) {
        let d = self.config.latent_dim;
        let n = self.config.codebook_size;
        let mut residual = latent.to_vec();
        let mut tokens = Vec::with_capacity(self.config.codebooks);
        let mut norms = Vec::with_capacity(self.config.codebooks);
        for stage in 0..self.config.codebooks {
            let book = &self.codebooks[stage * n * d..(stage + 1) * n * d];
            let norms2 = &self.codeword_norms[stage * n..(stage + 1) * n];
            let mut best = 0;
            let mut best_score = f32::INFINITY;
            for (i, (c, &c2)) in book.chunks_exact(d).zip(norms2).enumerate() {
                let dot: f32 = c.iter().zip(&residual).map(|(a, b)| a * b).sum();
                let score = c2 - 2.0 * dot;
                if score < best_score {
                    best_score = score;
                    best = i;
                }
            }
            let c = &book[best * d..(best + 1) * d];
            for (r, v) in residual.iter_mut().zip(c) {
                *r -= v;
            }
            tokens.push((best + 1) as u16);
            norms.push(residual.iter().map(|v| v * v).sum::<f32>().sqrt());
        }
        (tokens, norms)
    }

    /// Sum of the selected codewords of one frame.
    pub fn dequantize(&self, tokens: &[u16]) -> Vec<f32> {
        let mut z = vec![0.0f32; self.config.latent_dim];
        for (stage, &tok) in tokens.iter().enumerate() {
            for (a, v) in z.iter_mut().zip(self.codeword(stage, tok)) {
                *a += v;
            }
        }
        z
    }

    pub fn encode(&self, x: &AudioBuffer) -> Result<TokenGrid> {
        let samples = x
            .as_mono()
            .map_err(|_| Error::arg("codec input must be mono"))?;
        if x.sample_rate() != SAMPLE_RATE {
            return Err(Error::arg("codec input must be 44.1 kHz"));
        }
        let hop = self.config.hop();
        let frames = self.config.frames_for(samples.len());
        let mut data = Vec::with_capacity(frames * self.config.codebooks);
        let mut buf = vec![0.0f32; hop];
        for t in 0..frames {
            let start = t * hop;
            let end = (start + hop).min(samples.len());
            buf.fill(0.0);
            buf[..end - start].copy_from_slice(&samples[start..end]);
            let (tokens, _) = self.quantize_latent(&self.project(&buf));
            data.extend(tokens);
        }
        TokenGrid::new(
            frames,
            self.config.codebooks,
            self.config.codebook_size,
            self.config.frame_rate,
            data,
        )
    }

    pub fn decode(&self, q: &TokenGrid) -> Result<AudioBuffer> {
        if q.codebooks() != self.config.codebooks || q.codebook_size() != self.config.codebook_size {
            return Err(Error::arg(format!(
                "token grid is K={}, N={}; codec is K={}, N={}",
                q.codebooks(),
                q.codebook_size(),
                self.config.codebooks,
                self.config.codebook_size
            )));
        }
        let hop = self.config.hop();
        let mut out = vec![0.0f32; q.frames() * hop];
        for t in 0..q.frames() {
            let z = self.dequantize(q.frame(t));
            let frame = &mut out[t * hop..(t + 1) * hop];
            for (row, &zi) in self.analysis.chunks_exact(hop).zip(&z) {
                for (o, a) in frame.iter_mut().zip(row) {
                    *o += zi * a;
                }
            }
        }
        Ok(AudioBuffer::mono(out))
    }
}

/// Random orthonormal rows spanning low-order DCT-II directions: each row is a
/// Gaussian combination of the first `2 * latent_dim` DCT basis vectors,
/// orthonormalized by Gram-Schmidt.
fn analysis_matrix(hop: usize, latent_dim: usize, seed: SeedTree) -> Vec<f32> {
    let span = (2 * latent_dim).min(hop);
    let mut rng = seed.rng();
    let dct: Vec<Vec<f64>> = (0..span)
        .map(|j| {
            let scale = if j == 0 { (1.0 / hop as f64).sqrt() } else { (2.0 / hop as f64).sqrt() };
            (0..hop)
                .map(|n| scale * (std::f64::consts::PI * (n as f64 + 0.5) * j as f64 / hop as f64).cos())
                .collect()
        })
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(latent_dim);
    while rows.len() < latent_dim {
        let coeffs: Vec<f64> = (0..span).map(|_| rng.sample(StandardNormal)).collect();
        let mut v = vec![0.0f64; hop];
        for (c, basis) in coeffs.iter().zip(&dct) {
            for (o, b) in v.iter_mut().zip(basis) {
                *o += c * b;
            }
        }
        // Two Gram-Schmidt passes for numerical orthogonality.
        for _ in 0..2 {
            for r in &rows {
                let dot: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (o, a) in v.iter_mut().zip(r) {
                    *o -= dot * a;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        rows.push(v);
    }
    rows.into_iter().flatten().map(|x| x as f32).collect()
}

fn build_codebooks(config: &CodecConfig, seed: SeedTree) -> (Vec<f32>, Vec<f64>) {
    let (k, n, d) = (config.codebooks, config.codebook_size, config.latent_dim);
    let mut data = Vec::with_capacity(k * n * d);
    let mut radii = Vec::with_capacity(k);
    let mut radius = BASE_RADIUS;
    for stage in 0..k {
        let mut rng = seed.index(stage as u64).rng();
        let mut book = vec![0.0f64; n * d];
        for c in book.chunks_exact_mut(d).skip(1) {
            let norm = loop {
                for v in c.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-9 {
                    break norm;
                }
            };
            c.iter_mut().for_each(|v| *v *= radius / norm);
        }
        let spacing = min_spacing(&book, d);
        radii.push(radius);
        data.extend(book.iter().map(|&v| v as f32));
        radius = RADIUS_SHRINK * spacing;
    }
    (data, radii)
}

fn min_spacing(book: &[f64], d: usize) -> f64 {
    let words: Vec<&[f64]> = book.chunks_exact(d).collect();
    let mut best = f64::INFINITY;
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            let dist2: f64 = words[i].iter().zip(words[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.min(dist2);
        }
    }
    best.sqrt()
}
