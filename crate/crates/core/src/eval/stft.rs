use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f32> {
    (0..n)
        .map(|i| (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()) as f32)
        .collect()
}

/// Number of frames for a signal of `len` samples: the signal is zero-padded
/// to at least one frame and to a whole number of hops, frames start at 0.
pub fn frame_count(len: usize, fft: usize, hop: usize) -> usize {
    1 + len.max(fft).saturating_sub(fft).div_ceil(hop)
}

/// Magnitude spectrogram: `frames × (fft/2 + 1)`, row-major.
pub struct Stft {
    fft_size: usize,
    hop: usize,
    window: Vec<f32>,
    plan: Arc<dyn Fft<f32>>,
}

impl Stft {
    pub fn new(fft_size: usize, hop: usize) -> Self {
        let plan = FftPlanner::new().plan_fft_forward(fft_size);
        Stft { fft_size, hop, window: hann(fft_size), plan }
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn magnitudes(&self, x: &[f32], frames: usize) -> Vec<f32> {
        let bins = self.bins();
        let mut out = Vec::with_capacity(frames * bins);
        let mut buf = vec![Complex::new(0.0f32, 0.0); self.fft_size];
        let mut scratch = vec![Complex::new(0.0f32, 0.0); self.plan.get_inplace_scratch_len()];
        for f in 0..frames {
            let start = f * self.hop;
            for (i, (b, &w)) in buf.iter_mut().zip(&self.window).enumerate() {
                let v = x.get(start + i).copied().unwrap_or(0.0);
                *b = Complex::new(v * w, 0.0);
            }
            self.plan.process_with_scratch(&mut buf, &mut scratch);
            out.extend(buf[..bins].iter().map(|c| c.norm()));
        }
        out
    }
}
