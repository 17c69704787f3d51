use std::collections::{BTreeMap, BTreeSet};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::instrument::{prepare_instrument_loop, LoopInfo};
use super::{
    apply_fx_chain, generate_drum_pattern, layer_oneshots, render_drum_loop, sample_fx_params,
    ByClass, DrumPattern, Instrument, LayerWeights, SampleLibrary, TrackRole, LOOP_SAMPLES,
};
use crate::audio::{mix_sum, AudioBuffer};
use crate::error::Result;
use crate::rng::SeedTree;

/// Per-class probability of layering two one-shots.
pub const LAYERING_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerChoice {
    pub index: usize,
    pub weights: LayerWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneShotChoice {
    pub index: usize,
    pub layer: Option<LayerChoice>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstrumentChoice {
    pub index: usize,
    #[serde(flatten)]
    pub info: LoopInfo,
}

/// Everything needed to explain (and regenerate) one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    pub seed: u64,
    pub pattern: DrumPattern,
    pub oneshots: ByClass<OneShotChoice>,
    pub instruments: BTreeMap<Instrument, InstrumentChoice>,
    pub fx_seeds: BTreeMap<String, u64>,
}

impl PairMeta {
    pub fn included_instruments(&self) -> BTreeSet<Instrument> {
        self.instruments.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixturePair {
    /// Mastered stereo mixture, exactly four seconds.
    pub mixture: AudioBuffer,
    /// Mono one-shots as used by the pattern (after layering, before any FX).
    pub oneshots: ByClass<AudioBuffer>,
    /// Rendered mono drum loops before their mixing chains.
    pub drum_stems: ByClass<AudioBuffer>,
    pub meta: PairMeta,
}

impl MixturePair {
    pub fn seed(&self) -> u64 {
        self.meta.seed
    }

    pub fn pattern(&self) -> &DrumPattern {
        &self.meta.pattern
    }
}

/// Builds one pair: pattern → one-shots (optionally layered) → drum stems →
/// instrument loops → per-track chains → sum → mastering.
pub fn generate_pair(seed: SeedTree, library: &SampleLibrary) -> Result<MixturePair> {
    library.check_complete()?;

    let pattern = generate_drum_pattern(&mut seed.child("pattern").rng());

    let mut choices = ByClass::<OneShotChoice>::default_choices();
    let oneshots = ByClass::try_from_fn(|class| {
        let pool = &library.oneshots[class];
        let mut rng = seed.child("oneshot").child(class.name()).rng();
        let index = rng.random_range(0..pool.len());
        let primary = &pool[index].audio;
        let (audio, layer) = if rng.random_bool(LAYERING_PROBABILITY) {
            let other = rng.random_range(0..pool.len());
            let weights = LayerWeights::ALL[rng.random_range(0..LayerWeights::ALL.len())];
            let layered = layer_oneshots(primary, &pool[other].audio, weights)?;
            (layered, Some(LayerChoice { index: other, weights }))
        } else {
            (primary.clone(), None)
        };
        choices[class] = OneShotChoice { index, layer };
        Ok::<_, crate::Error>(audio)
    })?;

    let drum_stems = render_drum_loop(&pattern, &oneshots)?;

    let mut fx_seeds = BTreeMap::new();
    let fx_root = seed.child("fx");
    let mut tracks = Vec::with_capacity(8);
    for (class, stem) in drum_stems.iter() {
        let s = fx_root.child(class.name());
        fx_seeds.insert(class.name().to_owned(), s.seed());
        let params = sample_fx_params(&mut s.rng(), TrackRole::Drum);
        tracks.push(apply_fx_chain(stem, &params)?);
    }

    let mut instruments = BTreeMap::new();
    for inst in Instrument::ALL {
        let pool = library.loops(inst);
        let mut rng = seed.child("instrument").child(inst.name()).rng();
        let index = rng.random_range(0..pool.len());
        let Some(prepared) = prepare_instrument_loop(&pool[index].audio, &mut rng, inst) else {
            continue;
        };
        instruments.insert(inst, InstrumentChoice { index, info: prepared.info });
        let s = fx_root.child(inst.name());
        fx_seeds.insert(inst.name().to_owned(), s.seed());
        let params = sample_fx_params(&mut s.rng(), TrackRole::Instrument);
        tracks.push(apply_fx_chain(&prepared.audio, &params)?);
    }

    let refs: Vec<&AudioBuffer> = tracks.iter().collect();
    let bus = mix_sum(&refs)?;
    let master_seed = fx_root.child("master");
    fx_seeds.insert("master".to_owned(), master_seed.seed());
    let master = sample_fx_params(&mut master_seed.rng(), TrackRole::Master);
    let mixture = apply_fx_chain(&bus, &master)?;
    debug_assert_eq!(mixture.len(), LOOP_SAMPLES);

    Ok(MixturePair {
        mixture,
        oneshots,
        drum_stems,
        meta: PairMeta {
            seed: seed.seed(),
            pattern,
            oneshots: choices,
            instruments,
            fx_seeds,
        },
    })
}

impl ByClass<OneShotChoice> {
    fn default_choices() -> Self {
        ByClass::from_fn(|_| OneShotChoice { index: 0, layer: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth::{synth_library, SynthCounts};

    #[test]
    fn empty_class_is_rejected() {
        let mut lib = synth_library(1, SynthCounts { oneshots_per_class: 1, loops_per_instrument: 1 });
        lib.oneshots.snare.clear();
        assert!(generate_pair(SeedTree::new(0), &lib).is_err());
    }
}
