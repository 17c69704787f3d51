//! Audio buffers, WAV I/O and elementary sample operations.

mod ops;
mod wav;

pub use ops::{db_to_amplitude, gain_db, mix_sum, slice};
pub use wav::{load_wav, read_wav, save_wav, write_wav};

use crate::error::{Error, Result};

/// Every buffer crossing a module boundary runs at this rate.
pub const SAMPLE_RATE: u32 = 44_100;

/// Planar 32-bit float audio. All channels share one length.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    channels: Vec<Vec<f32>>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn from_channels(channels: Vec<Vec<f32>>, sample_rate: u32) -> Result<Self> {
        if channels.is_empty() || channels.len() > 2 {
            return Err(Error::arg(format!(
                "expected 1 or 2 channels, got {}",
                channels.len()
            )));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::arg("channels differ in length"));
        }
        if channels.iter().flatten().any(|s| !s.is_finite()) {
            return Err(Error::arg("non-finite sample"));
        }
        Ok(AudioBuffer {
            channels,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f32>) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        AudioBuffer {
            channels: vec![samples],
            sample_rate: SAMPLE_RATE,
        }
    }

    pub fn stereo(left: Vec<f32>, right: Vec<f32>) -> Self {
        assert_eq!(left.len(), right.len(), "stereo channels differ in length");
        AudioBuffer {
            channels: vec![left, right],
            sample_rate: SAMPLE_RATE,
        }
    }

    pub fn silence(channels: usize, len: usize) -> Self {
        AudioBuffer {
            channels: vec![vec![0.0; len]; channels],
            sample_rate: SAMPLE_RATE,
        }
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn is_mono(&self) -> bool {
        self.channels.len() == 1
    }

    pub fn channel(&self, idx: usize) -> &[f32] {
        &self.channels[idx]
    }

    pub fn channels(&self) -> &[Vec<f32>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f32>> {
        self.channels
    }

    /// Mono samples; fails on stereo input.
    pub fn as_mono(&self) -> Result<&[f32]> {
        if self.is_mono() {
            Ok(&self.channels[0])
        } else {
            Err(Error::arg("expected a mono buffer"))
        }
    }

    /// Average of channels. Mono input is returned unchanged.
    pub fn to_mono(&self) -> AudioBuffer {
        if self.is_mono() {
            return self.clone();
        }
        let scale = 1.0 / self.channels.len() as f32;
        let samples = (0..self.len())
            .map(|i| self.channels.iter().map(|c| c[i]).sum::<f32>() * scale)
            .collect();
        AudioBuffer {
            channels: vec![samples],
            sample_rate: self.sample_rate,
        }
    }

    pub fn peak(&self) -> f32 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0f32, |m, s| m.max(s.abs()))
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn map(&self, mut f: impl FnMut(f32) -> f32) -> AudioBuffer {
        AudioBuffer {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|&s| f(s)).collect())
                .collect(),
            sample_rate: self.sample_rate,
        }
    }
}
