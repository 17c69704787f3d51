//! Procedural stand-in for a recorded sample library.
//!
//! Drums are classic analog-style voices (pitch-swept sine kick, tone plus
//! noise snare, high-passed noise hi-hat); loops are short seeded note
//! sequences (additive bass and piano, Karplus-Strong guitar, vibrato vowel).

use std::collections::BTreeMap;
use std::f32::consts::PI;

use rand::Rng as _;

use super::{ByClass, DrumClass, Instrument, LibraryEntry, SampleLibrary};
use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::rng::{Rng, SeedTree};

const FS: f32 = SAMPLE_RATE as f32;

#[derive(Debug, Clone, Copy)]
pub struct SynthCounts {
    pub oneshots_per_class: usize,
    pub loops_per_instrument: usize,
}

impl Default for SynthCounts {
    fn default() -> Self {
        SynthCounts {
            oneshots_per_class: 24,
            loops_per_instrument: 6,
        }
    }
}

pub fn synth_library(seed: u64, counts: SynthCounts) -> SampleLibrary {
    let root = SeedTree::new(seed).child("library");
    let oneshots = ByClass::from_fn(|class| {
        (0..counts.oneshots_per_class)
            .map(|i| {
                let mut rng = root.child(class.name()).index(i as u64).rng();
                LibraryEntry {
                    name: format!("{}_{i:03}.wav", class.name()),
                    audio: AudioBuffer::mono(synth_oneshot(class, &mut rng)),
                }
            })
            .collect()
    });
    let mut loops = BTreeMap::new();
    for inst in Instrument::ALL {
        let entries = (0..counts.loops_per_instrument)
            .map(|i| {
                let mut rng = root.child(inst.name()).index(i as u64).rng();
                LibraryEntry {
                    name: format!("{}_{i:03}.wav", inst.name()),
                    audio: AudioBuffer::mono(synth_loop(inst, &mut rng)),
                }
            })
            .collect();
        loops.insert(inst, entries);
    }
    SampleLibrary { oneshots, loops }
}

fn normalize(mut x: Vec<f32>, peak: f32) -> Vec<f32> {
    let m = x.iter().fold(0.0f32, |m, s| m.max(s.abs()));
    if m > 0.0 {
        let g = peak / m;
        x.iter_mut().for_each(|s| *s *= g);
    }
    x
}

fn white(rng: &mut Rng) -> f32 {
    rng.random_range(-1.0f32..1.0)
}

pub fn synth_oneshot(class: DrumClass, rng: &mut Rng) -> Vec<f32> {
    let peak = rng.random_range(0.6f32..0.95);
    match class {
        DrumClass::Kick => {
            let f_start = rng.random_range(90.0f32..200.0);
            let f_end = rng.random_range(38.0f32..65.0);
            let sweep = rng.random_range(0.015f32..0.06);
            let decay = rng.random_range(0.08f32..0.3);
            let click = rng.random_range(0.0f32..0.4);
            let len = ((decay * 5.0).min(0.95) * FS) as usize;
            let mut phase = 0.0f32;
            let x = (0..len)
                .map(|i| {
                    let t = i as f32 / FS;
                    let f = f_end + (f_start - f_end) * (-t / sweep).exp();
                    phase += 2.0 * PI * f / FS;
                    let body = phase.sin() * (-t / decay).exp();
                    let c = if t < 0.003 { click * white(rng) * (1.0 - t / 0.003) } else { 0.0 };
                    body + c
                })
                .collect();
            normalize(x, peak)
        }
        DrumClass::Snare => {
            let tone_f = rng.random_range(150.0f32..280.0);
            let tone_decay = rng.random_range(0.03f32..0.1);
            let noise_decay = rng.random_range(0.06f32..0.22);
            let noise_mix = rng.random_range(0.4f32..0.8);
            let len = ((noise_decay * 5.0).min(0.9) * FS) as usize;
            let mut lp = 0.0f32;
            let x = (0..len)
                .map(|i| {
                    let t = i as f32 / FS;
                    let tone = (2.0 * PI * tone_f * t).sin() * (-t / tone_decay).exp();
                    let n = white(rng);
                    lp += 0.3 * (n - lp);
                    let noise = (n - lp) * (-t / noise_decay).exp();
                    (1.0 - noise_mix) * tone + noise_mix * noise
                })
                .collect();
            normalize(x, peak)
        }
        DrumClass::Hihat => {
            let decay = rng.random_range(0.02f32..0.18);
            let metal: Vec<f32> = (0..6).map(|_| rng.random_range(3000.0f32..9000.0)).collect();
            let metal_mix = rng.random_range(0.1f32..0.5);
            let len = ((decay * 6.0).min(0.8) * FS) as usize;
            let (mut x1, mut y1) = (0.0f32, 0.0f32);
            let x = (0..len)
                .map(|i| {
                    let t = i as f32 / FS;
                    let n = white(rng);
                    // one-pole high-pass around 6-7 kHz
                    let hp = 0.45 * (y1 + n - x1);
                    x1 = n;
                    y1 = hp;
                    let sq: f32 = metal
                        .iter()
                        .map(|f| if (2.0 * PI * f * t).sin() >= 0.0 { 1.0 } else { -1.0 })
                        .sum::<f32>()
                        / metal.len() as f32;
                    ((1.0 - metal_mix) * hp + metal_mix * sq * 0.5) * (-t / decay).exp()
                })
                .collect();
            normalize(x, peak)
        }
    }
}

fn midi_hz(note: f32) -> f32 {
    440.0 * 2f32.powf((note - 69.0) / 12.0)
}

const SCALE: [i32; 7] = [0, 2, 3, 5, 7, 8, 10];

fn scale_note(rng: &mut Rng, root: i32, lo: i32, hi: i32) -> f32 {
    loop {
        let n = rng.random_range(lo..=hi);
        if SCALE.contains(&(n - root).rem_euclid(12)) {
            return n as f32;
        }
    }
}

pub fn synth_loop(instrument: Instrument, rng: &mut Rng) -> Vec<f32> {
    let secs = rng.random_range(4.0f32..8.0);
    let len = (secs * FS) as usize;
    let bpm = rng.random_range(80.0f32..140.0);
    let beat = 60.0 / bpm;
    let root = rng.random_range(0..12);
    let mut out = vec![0.0f32; len];
    let (step, lo, hi) = match instrument {
        Instrument::Bass => (beat / 2.0, 28, 48),
        Instrument::Piano => (beat, 55, 80),
        Instrument::Guitar => (beat / 2.0, 45, 72),
        Instrument::Vocal => (beat * 2.0, 55, 74),
    };
    let mut t0 = 0.0f32;
    while t0 < secs {
        let dur = step * if rng.random_bool(0.25) { 2.0 } else { 1.0 };
        if rng.random_bool(0.85) {
            let note = scale_note(rng, root, lo, hi);
            let start = (t0 * FS) as usize;
            let n = ((dur * 1.2 * FS) as usize).min(len.saturating_sub(start));
            let voice = match instrument {
                Instrument::Bass => bass_note(midi_hz(note), n),
                Instrument::Piano => piano_note(midi_hz(note), n),
                Instrument::Guitar => pluck(midi_hz(note), n, rng),
                Instrument::Vocal => vowel(midi_hz(note), n, rng),
            };
            for (o, v) in out[start..].iter_mut().zip(voice) {
                *o += v;
            }
        }
        t0 += dur;
    }
    normalize(out, 0.8)
}

fn bass_note(f: f32, n: usize) -> Vec<f32> {
    (0..n)
        .map(|i| {
            let t = i as f32 / FS;
            let env = (1.0 - (-t / 0.005).exp()) * (-t / 0.4).exp();
            (1..=6).map(|h| (2.0 * PI * f * h as f32 * t).sin() / h as f32).sum::<f32>() * env
        })
        .collect()
}

fn piano_note(f: f32, n: usize) -> Vec<f32> {
    (0..n)
        .map(|i| {
            let t = i as f32 / FS;
            (1..=5)
                .map(|h| {
                    let hf = h as f32;
                    (2.0 * PI * f * hf * t).sin() * (-t * (1.5 + hf)).exp() / (hf * hf)
                })
                .sum::<f32>()
                * (1.0 - (-t / 0.002).exp())
        })
        .collect()
}

fn pluck(f: f32, n: usize, rng: &mut Rng) -> Vec<f32> {
    let period = ((FS / f) as usize).max(2);
    let mut line: Vec<f32> = (0..period).map(|_| white(rng)).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let j = i % period;
        let next = line[(j + 1) % period];
        let v = line[j];
        out.push(v);
        line[j] = 0.996 * 0.5 * (v + next);
    }
    out
}

fn vowel(f: f32, n: usize, rng: &mut Rng) -> Vec<f32> {
    // Harmonic amplitudes shaped by two formant bumps.
    let f1 = rng.random_range(300.0f32..800.0);
    let f2 = rng.random_range(900.0f32..2200.0);
    let harmonics: Vec<(f32, f32)> = (1..=20)
        .map(|h| {
            let hf = f * h as f32;
            let bump = |c: f32| (-((hf - c) / 150.0).powi(2)).exp();
            (h as f32, (bump(f1) + 0.6 * bump(f2) + 0.05) / h as f32)
        })
        .filter(|(h, _)| f * h < 8000.0)
        .collect();
    let mut phase = 0.0f32;
    (0..n)
        .map(|i| {
            let t = i as f32 / FS;
            let vib = 1.0 + 0.01 * (2.0 * PI * 5.5 * t).sin();
            phase += 2.0 * PI * f * vib / FS;
            let env = (1.0 - (-t / 0.05).exp()) * (-t / 2.0).exp();
            harmonics.iter().map(|(h, a)| a * (phase * h).sin()).sum::<f32>() * env
        })
        .collect()
}
