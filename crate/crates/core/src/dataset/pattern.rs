use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ByClass, DrumClass, LOOP_SAMPLES};
use crate::rng::Rng;

/// Equally spaced onset positions per four-second loop.
pub const GRID_SIZE: usize = 1920;

/// Inclusive hit-count range per class: kick, snare, hihat.
pub const HIT_RANGES: ByClass<(usize, usize)> = ByClass {
    kick: (2, 4),
    snare: (2, 4),
    hihat: (14, 18),
};

/// Sorted, duplicate-free grid indices per drum class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DrumPattern {
    onsets: ByClass<Vec<u16>>,
}

impl DrumPattern {
    /// Builds a pattern from explicit onsets, validating grid bounds and ordering.
    /// Hit-count ranges are only guaranteed for generated patterns.
    pub fn new(onsets: ByClass<Vec<u16>>) -> crate::Result<Self> {
        for (class, hits) in onsets.iter() {
            if hits.windows(2).any(|w| w[0] >= w[1]) {
                return Err(crate::Error::arg(format!(
                    "{class} onsets must be strictly increasing"
                )));
            }
            if hits.iter().any(|&g| g as usize >= GRID_SIZE) {
                return Err(crate::Error::arg(format!("{class} onset outside the grid")));
            }
        }
        Ok(DrumPattern { onsets })
    }

    pub fn onsets(&self, class: DrumClass) -> &[u16] {
        &self.onsets[class]
    }

    pub fn all_onsets(&self) -> &ByClass<Vec<u16>> {
        &self.onsets
    }

    pub fn satisfies_hit_ranges(&self) -> bool {
        DrumClass::ALL.iter().all(|&c| {
            let (lo, hi) = HIT_RANGES[c];
            (lo..=hi).contains(&self.onsets[c].len())
        })
    }
}

/// Sample position of a grid index: `round(g * 4 * 44100 / 1920)`.
pub fn grid_to_sample(g: u16) -> usize {
    let step = LOOP_SAMPLES as f64 / GRID_SIZE as f64;
    (g as f64 * step).round() as usize
}

pub fn generate_drum_pattern(rng: &mut Rng) -> DrumPattern {
    let onsets = ByClass::from_fn(|class| {
        let (lo, hi) = HIT_RANGES[class];
        let count = rng.random_range(lo..=hi);
        let mut hits: Vec<u16> = index::sample(rng, GRID_SIZE, count)
            .into_iter()
            .map(|g| g as u16)
            .collect();
        hits.sort_unstable();
        hits
    });
    DrumPattern { onsets }
}
