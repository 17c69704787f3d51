//! Procedural generation of paired (mixture, drum one-shot) examples.
//!
//! A pair is built from a seeded drum pattern on a 1920-point grid over a
//! four-second loop, one-shots (optionally layered) rendered onto that grid,
//! up to four pitch-shifted instrument loops, per-track mixing chains and a
//! mastering chain.

mod export;
pub mod fx;
mod instrument;
mod layering;
mod library;
mod manifest;
mod pair;
mod pattern;
mod pitch;
mod render;
pub mod synth;

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::SAMPLE_RATE;
use crate::error::Error;

pub use export::{generate_split, pair_seed, regenerate_record, DatasetSummary};
pub use fx::{apply_fx_chain, sample_fx_params, FxParams, TrackRole};
pub use instrument::{
    plan_loop, prepare_instrument_loop, render_loop, LoopInfo, PreparedLoop, EXCLUSION_PROBABILITY,
};
pub use layering::{layer_oneshots, LayerWeights};
pub use library::{LibraryEntry, SampleLibrary};
pub use manifest::{read_manifest, write_manifest, PairRecord};
pub use pair::{generate_pair, LayerChoice, MixturePair, OneShotChoice, PairMeta};
pub use pattern::{generate_drum_pattern, grid_to_sample, DrumPattern, GRID_SIZE, HIT_RANGES};
pub use pitch::{pitch_shift, time_stretch};
pub use render::{instance_spans, render_drum_loop};
pub use synth::{synth_library, SynthCounts};

pub const LOOP_SECONDS: f64 = 4.0;
pub const LOOP_SAMPLES: usize = 4 * SAMPLE_RATE as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrumClass {
    Kick,
    Snare,
    Hihat,
}

impl DrumClass {
    pub const ALL: [DrumClass; 3] = [DrumClass::Kick, DrumClass::Snare, DrumClass::Hihat];

    pub fn name(self) -> &'static str {
        match self {
            DrumClass::Kick => "kick",
            DrumClass::Snare => "snare",
            DrumClass::Hihat => "hihat",
        }
    }
}

impl fmt::Display for DrumClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DrumClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kick" => Ok(DrumClass::Kick),
            "snare" => Ok(DrumClass::Snare),
            "hihat" | "hi-hat" => Ok(DrumClass::Hihat),
            other => Err(Error::arg(format!("unknown drum class '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Instrument {
    Bass,
    Piano,
    Guitar,
    Vocal,
}

impl Instrument {
    pub const ALL: [Instrument; 4] = [
        Instrument::Bass,
        Instrument::Piano,
        Instrument::Guitar,
        Instrument::Vocal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Instrument::Bass => "bass",
            Instrument::Piano => "piano",
            Instrument::Guitar => "guitar",
            Instrument::Vocal => "vocal",
        }
    }

    /// Inclusive semitone range for loop pitch shifting.
    pub fn shift_range(self) -> (i32, i32) {
        match self {
            Instrument::Bass => (-6, 2),
            _ => (-12, 12),
        }
    }
}

impl fmt::Display for Instrument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per drum class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByClass<T> {
    pub kick: T,
    pub snare: T,
    pub hihat: T,
}

impl<T> ByClass<T> {
    pub fn from_fn(mut f: impl FnMut(DrumClass) -> T) -> Self {
        ByClass {
            kick: f(DrumClass::Kick),
            snare: f(DrumClass::Snare),
            hihat: f(DrumClass::Hihat),
        }
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(DrumClass) -> Result<T, E>) -> Result<Self, E> {
        Ok(ByClass {
            kick: f(DrumClass::Kick)?,
            snare: f(DrumClass::Snare)?,
            hihat: f(DrumClass::Hihat)?,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (DrumClass, &T)> {
        DrumClass::ALL.into_iter().map(move |c| (c, &self[c]))
    }
}

impl<T> Index<DrumClass> for ByClass<T> {
    type Output = T;

    fn index(&self, c: DrumClass) -> &T {
        match c {
            DrumClass::Kick => &self.kick,
            DrumClass::Snare => &self.snare,
            DrumClass::Hihat => &self.hihat,
        }
    }
}

impl<T> IndexMut<DrumClass> for ByClass<T> {
    fn index_mut(&mut self, c: DrumClass) -> &mut T {
        match c {
            DrumClass::Kick => &mut self.kick,
            DrumClass::Snare => &mut self.snare,
            DrumClass::Hihat => &mut self.hihat,
        }
    }
}
