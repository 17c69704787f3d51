use super::stft::{frame_count, Stft};
use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::error::{Error, Result};

pub const EMBED_BANDS: usize = 64;
pub const EMBED_DIM: usize = 2 * EMBED_BANDS;
const EMBED_FFT: usize = 1024;
const EMBED_HOP: usize = 256;
const LOG_FLOOR: f64 = 1e-10;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filters over `0..=sr/2`, `bands × bins`.
fn mel_filters(bands: usize, fft: usize, sr: f64) -> Vec<Vec<f64>> {
    let bins = fft / 2 + 1;
    let top = hz_to_mel(sr / 2.0);
    let edges: Vec<f64> = (0..bands + 2)
        .map(|i| mel_to_hz(top * i as f64 / (bands + 1) as f64))
        .collect();
    (0..bands)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|b| {
                    let f = b as f64 * sr / fft as f64;
                    let up = (f - lo) / (mid - lo);
                    let down = (hi - f) / (hi - mid);
                    up.min(down).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Log-mel statistics embedding: 64-band log-mel power spectrogram (FFT
/// 1024, hop 256), per-band mean then per-band standard deviation.
pub fn builtin_embedding(x: &AudioBuffer) -> Result<Vec<f64>> {
    let samples = x.as_mono().map_err(|_| Error::arg("embedder input must be mono"))?;
    if samples.is_empty() {
        return Err(Error::arg("cannot embed an empty signal"));
    }
    let stft = Stft::new(EMBED_FFT, EMBED_HOP);
    let frames = frame_count(samples.len(), EMBED_FFT, EMBED_HOP);
    let mags = stft.magnitudes(samples, frames);
    let filters = mel_filters(EMBED_BANDS, EMBED_FFT, SAMPLE_RATE as f64);
    let bins = stft.bins();
    let logmel: Vec<f64> = mags
        .chunks_exact(bins)
        .flat_map(|frame| {
            filters.iter().map(move |filt| {
                let energy: f64 = filt.iter().zip(frame).map(|(&w, &a)| w * (a as f64) * (a as f64)).sum();
                (energy + LOG_FLOOR).ln()
            })
        })
        .collect();
    let n = frames as f64;
    let band = |m: usize| logmel.iter().skip(m).step_by(EMBED_BANDS);
    let means: Vec<f64> = (0..EMBED_BANDS).map(|m| band(m).sum::<f64>() / n).collect();
    let stds: Vec<f64> = (0..EMBED_BANDS)
        .map(|m| (band(m).map(|v| (v - means[m]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    let mut out = means;
    out.extend(stds);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_is_floor_with_zero_spread() {
        let e = builtin_embedding(&AudioBuffer::silence(1, 5000)).unwrap();
        assert_eq!(e.len(), EMBED_DIM);
        let floor = LOG_FLOOR.ln();
        assert!(e[..EMBED_BANDS].iter().all(|&m| (m - floor).abs() < 1e-9));
        assert!(e[EMBED_BANDS..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn every_band_sees_energy() {
        let filters = mel_filters(EMBED_BANDS, EMBED_FFT, 44_100.0);
        assert!(filters.iter().all(|f| f.iter().any(|&w| w > 0.0)));
    }

    #[test]
    fn deterministic_and_sized() {
        let x = AudioBuffer::mono((0..1024).map(|i| (i as f32 * 0.05).sin()).collect());
        assert_eq!(builtin_embedding(&x).unwrap(), builtin_embedding(&x).unwrap());
        assert_eq!(builtin_embedding(&x).unwrap().len(), 128);
    }
}
