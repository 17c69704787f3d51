use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{pitch_shift, Instrument, LOOP_SAMPLES};
use crate::audio::{slice, AudioBuffer, SAMPLE_RATE};
use crate::rng::Rng;

/// Chance that an instrument is left out of a mixture.
pub const EXCLUSION_PROBABILITY: f64 = 0.30;

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedLoop {
    pub audio: AudioBuffer,
    pub info: LoopInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub segment_seconds: u32,
    pub start_sample: usize,
    pub semitones: i32,
}

/// Drops the instrument with probability 0.3; otherwise cuts a 4 s or 2 s
/// segment (2 s segments are repeated to fill 4 s) and pitch-shifts it by a
/// uniform integer semitone amount from the instrument's range.
pub fn prepare_instrument_loop(
    source: &AudioBuffer,
    rng: &mut Rng,
    instrument: Instrument,
) -> Option<PreparedLoop> {
    let info = plan_loop(rng, instrument, source.len())?;
    Some(PreparedLoop {
        audio: render_loop(source, info),
        info,
    })
}

/// The random decisions of [`prepare_instrument_loop`], without the audio work.
pub fn plan_loop(rng: &mut Rng, instrument: Instrument, source_len: usize) -> Option<LoopInfo> {
    if rng.random_bool(EXCLUSION_PROBABILITY) {
        return None;
    }
    let segment_seconds: u32 = if rng.random_bool(0.5) { 4 } else { 2 };
    let seg_len = segment_seconds as usize * SAMPLE_RATE as usize;
    let start_sample = if source_len > seg_len {
        rng.random_range(0..=source_len - seg_len)
    } else {
        0
    };
    let (lo, hi) = instrument.shift_range();
    let semitones = rng.random_range(lo..=hi);
    Some(LoopInfo {
        segment_seconds,
        start_sample,
        semitones,
    })
}

pub fn render_loop(source: &AudioBuffer, info: LoopInfo) -> AudioBuffer {
    let mono = source.to_mono();
    let seg_len = info.segment_seconds as usize * SAMPLE_RATE as usize;
    let segment = slice(&mono, info.start_sample, seg_len);
    let seg = segment.channel(0);
    let filled: Vec<f32> = (0..LOOP_SAMPLES).map(|i| seg[i % seg_len]).collect();
    AudioBuffer::mono(pitch_shift(&filled, info.semitones))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    fn source() -> AudioBuffer {
        AudioBuffer::mono(
            (0..6 * SAMPLE_RATE as usize)
                .map(|i| (i as f32 * 0.013).sin() * 0.5)
                .collect(),
        )
    }

    #[test]
    fn exclusion_rate_near_thirty_percent() {
        let src = AudioBuffer::mono(vec![0.1; 100]);
        let n = 10_000;
        let absent = (0..n)
            .filter(|&s| plan_loop(&mut SeedTree::new(s).rng(), Instrument::Piano, 1000).is_none())
            .count();
        let rate = absent as f64 / n as f64;
        assert!((rate - 0.30).abs() <= 0.02, "{rate}");
        for s in 0..20 {
            let plan = plan_loop(&mut SeedTree::new(s).rng(), Instrument::Piano, src.len());
            let real = prepare_instrument_loop(&src, &mut SeedTree::new(s).rng(), Instrument::Piano);
            assert_eq!(plan, real.map(|p| p.info));
        }
    }

    #[test]
    fn bass_shifts_stay_in_range() {
        let mut seen = std::collections::BTreeSet::new();
        for s in 0..2000 {
            if let Some(p) = plan_loop(&mut SeedTree::new(s).rng(), Instrument::Bass, 1000) {
                seen.insert(p.semitones);
            }
        }
        assert!(seen.iter().all(|s| (-6..=2).contains(s)), "{seen:?}");
        assert_eq!(seen.len(), 9, "{seen:?}");
    }

    #[test]
    fn output_fills_four_seconds() {
        let src = source();
        let mut found_two = false;
        for s in 0..40 {
            if let Some(p) = prepare_instrument_loop(&src, &mut SeedTree::new(s).rng(), Instrument::Guitar) {
                assert_eq!(p.audio.len(), LOOP_SAMPLES);
                assert!(p.info.segment_seconds == 2 || p.info.segment_seconds == 4);
                if p.info.segment_seconds == 2 && p.info.semitones == 0 {
                    let x = p.audio.channel(0);
                    assert_eq!(&x[..88_200], &x[88_200..]);
                }
                found_two |= p.info.segment_seconds == 2;
            }
        }
        assert!(found_two);
    }

    #[test]
    fn zero_shift_equals_sliced_input() {
        let src = source();
        for s in 0..500 {
            let Some(p) = prepare_instrument_loop(&src, &mut SeedTree::new(s).rng(), Instrument::Piano)
            else {
                continue;
            };
            if p.info.semitones != 0 {
                continue;
            }
            let seg_len = p.info.segment_seconds as usize * SAMPLE_RATE as usize;
            let seg = slice(&src, p.info.start_sample, seg_len);
            for (i, &y) in p.audio.channel(0).iter().enumerate() {
                assert!((y - seg.channel(0)[i % seg_len]).abs() <= 1e-6);
            }
            return;
        }
        panic!("no zero-shift draw in 500 seeds");
    }
}
