use super::stft::{frame_count, Stft};
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

pub const MSS_FFT_SIZES: [usize; 6] = [2048, 1024, 512, 256, 128, 64];

/// One resolution of the multi-scale comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectrogramScale {
    pub fft_size: usize,
}

impl SpectrogramScale {
    pub fn hop(self) -> usize {
        self.fft_size / 4
    }

    pub fn all() -> impl Iterator<Item = SpectrogramScale> {
        MSS_FFT_SIZES.into_iter().map(|fft_size| SpectrogramScale { fft_size })
    }
}

/// MSE between Hann-windowed magnitude spectrograms at one scale. The shorter
/// signal is zero-padded to the longer.
pub fn spectral_mse(a: &[f32], b: &[f32], scale: SpectrogramScale) -> f64 {
    let len = a.len().max(b.len());
    let frames = frame_count(len, scale.fft_size, scale.hop());
    let stft = Stft::new(scale.fft_size, scale.hop());
    let ma = stft.magnitudes(a, frames);
    let mb = stft.magnitudes(b, frames);
    let sum: f64 = ma
        .iter()
        .zip(&mb)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    sum / ma.len() as f64
}

/// Multi-scale spectral distance: mean of the per-scale MSEs over FFT sizes
/// 2048 down to 64 with hop = size / 4.
pub fn mss(a: &AudioBuffer, b: &AudioBuffer) -> Result<f64> {
    let xa = a.as_mono().map_err(|_| Error::arg("mss inputs must be mono"))?;
    let xb = b.as_mono().map_err(|_| Error::arg("mss inputs must be mono"))?;
    if xa.is_empty() || xb.is_empty() {
        return Err(Error::arg("mss of an empty signal"));
    }
    let total: f64 = SpectrogramScale::all().map(|s| spectral_mse(xa, xb, s)).sum();
    Ok(total / MSS_FFT_SIZES.len() as f64)
}
