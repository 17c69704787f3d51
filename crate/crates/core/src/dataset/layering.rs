use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Amplitude weight pairs for two-sample drum layering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerWeights {
    #[serde(rename = "0.8/0.2")]
    W80_20,
    #[serde(rename = "0.7/0.3")]
    W70_30,
    #[serde(rename = "0.6/0.4")]
    W60_40,
}

impl LayerWeights {
    pub const ALL: [LayerWeights; 3] = [
        LayerWeights::W80_20,
        LayerWeights::W70_30,
        LayerWeights::W60_40,
    ];

    pub fn pair(self) -> (f32, f32) {
        match self {
            LayerWeights::W80_20 => (0.8, 0.2),
            LayerWeights::W70_30 => (0.7, 0.3),
            LayerWeights::W60_40 => (0.6, 0.4),
        }
    }

    /// Weights expressed as gains in dB.
    pub fn gains_db(self) -> (f32, f32) {
        let (a, b) = self.pair();
        (20.0 * a.log10(), 20.0 * b.log10())
    }

    pub fn from_pair(w1: f32, w2: f32) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|w| {
                let (a, b) = w.pair();
                (a - w1).abs() < 1e-6 && (b - w2).abs() < 1e-6
            })
            .ok_or_else(|| Error::arg(format!("weight pair ({w1}, {w2}) is not a layering pair")))
    }
}

/// `w1*a + w2*b`, zero-padded to the longer input.
///
/// Evaluated as `a + w2*(b - a)` (same value since `w1 + w2 = 1`), which makes
/// layering a signal with itself exact.
pub fn layer_oneshots(a: &AudioBuffer, b: &AudioBuffer, weights: LayerWeights) -> Result<AudioBuffer> {
    let (a, b) = (a.as_mono()?, b.as_mono()?);
    let (_, w2) = weights.pair();
    let len = a.len().max(b.len());
    let out = (0..len)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0.0);
            let y = b.get(i).copied().unwrap_or(0.0);
            x + w2 * (y - x)
        })
        .collect();
    Ok(AudioBuffer::mono(out))
}
