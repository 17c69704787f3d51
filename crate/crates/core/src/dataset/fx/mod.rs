//! Mixing and mastering chains.
//!
//! Track chain: gain → EQ → compressor → pan (mono to stereo) → limiter, with
//! delay and reverb fed from the post-EQ signal and summed back, scaled by
//! their wet amounts, ahead of the limiter. The mastering chain is EQ → limiter.

mod biquad;
mod dynamics;
mod space;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use biquad::{apply_eq, Biquad, EqBand, FilterKind};
pub use dynamics::{compress, limit, CompressorParams};
pub use space::{delay, reverb, DelayParams, ReverbParams};

use crate::audio::{db_to_amplitude, AudioBuffer};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackRole {
    Drum,
    Instrument,
    Master,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FxParams {
    pub gain_db: f32,
    pub eq: Vec<EqBand>,
    pub compressor: Option<CompressorParams>,
    /// `None` leaves a stereo input as is and duplicates a mono one.
    pub pan: Option<f32>,
    pub limiter_threshold_db: f32,
    pub delay: Option<DelayParams>,
    pub reverb: Option<ReverbParams>,
}

impl FxParams {
    /// Unity chain: no gain, flat EQ, ratio-1 compressor, centre pan, 0 dB limiter, dry.
    pub fn neutral() -> Self {
        FxParams {
            gain_db: 0.0,
            eq: vec![
                EqBand { kind: FilterKind::LowShelf, freq_hz: 150.0, gain_db: 0.0, q: 0.707 },
                EqBand { kind: FilterKind::Peak, freq_hz: 1000.0, gain_db: 0.0, q: 1.0 },
                EqBand { kind: FilterKind::HighShelf, freq_hz: 6000.0, gain_db: 0.0, q: 0.707 },
            ],
            compressor: Some(CompressorParams { threshold_db: -20.0, ratio: 1.0, attack_ms: 10.0, release_ms: 100.0 }),
            pan: Some(0.0),
            limiter_threshold_db: 0.0,
            delay: Some(DelayParams { time_ms: 100.0, feedback: 0.0, wet: 0.0 }),
            reverb: Some(ReverbParams { decay_secs: 1.0, wet: 0.0 }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f32, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::arg(format!("{what} must be finite")))
            }
        };
        finite(self.gain_db, "gain")?;
        finite(self.limiter_threshold_db, "limiter threshold")?;
        for band in &self.eq {
            finite(band.gain_db, "EQ gain")?;
            if !(band.freq_hz > 20.0 && band.freq_hz < 20_000.0) {
                return Err(Error::arg(format!("EQ frequency {} Hz outside (20, 20000)", band.freq_hz)));
            }
            if !(band.q > 0.0 && band.q.is_finite()) {
                return Err(Error::arg("EQ Q must be positive"));
            }
        }
        if let Some(c) = &self.compressor {
            finite(c.threshold_db, "compressor threshold")?;
            if !(c.ratio >= 1.0 && c.ratio.is_finite()) {
                return Err(Error::arg(format!("compressor ratio {} < 1", c.ratio)));
            }
            if !(c.attack_ms >= 0.0 && c.release_ms >= 0.0) {
                return Err(Error::arg("compressor times must be non-negative"));
            }
        }
        if let Some(p) = self.pan {
            if !(-1.0..=1.0).contains(&p) {
                return Err(Error::arg(format!("pan {p} outside [-1, 1]")));
            }
        }
        if let Some(d) = &self.delay {
            if !(0.0..1.0).contains(&d.feedback) {
                return Err(Error::arg(format!("delay feedback {} outside [0, 1)", d.feedback)));
            }
            if !(0.0..=1.0).contains(&d.wet) {
                return Err(Error::arg("delay wet outside [0, 1]"));
            }
            if !(d.time_ms > 0.0 && d.time_ms.is_finite()) {
                return Err(Error::arg("delay time must be positive"));
            }
        }
        if let Some(r) = &self.reverb {
            if !(0.0..=1.0).contains(&r.wet) {
                return Err(Error::arg("reverb wet outside [0, 1]"));
            }
            if !(r.decay_secs > 0.0 && r.decay_secs.is_finite()) {
                return Err(Error::arg("reverb decay must be positive"));
            }
        }
        Ok(())
    }
}

/// Runs a track (mono or stereo) through the chain; output is always stereo.
pub fn apply_fx_chain(track: &AudioBuffer, params: &FxParams) -> Result<AudioBuffer> {
    params.validate()?;
    let g = db_to_amplitude(params.gain_db);
    let mut chans: Vec<Vec<f32>> = track
        .channels()
        .iter()
        .map(|c| c.iter().map(|&s| s * g).collect())
        .collect();
    for c in chans.iter_mut() {
        apply_eq(c, &params.eq);
    }

    let sends = send_returns(&chans, params);

    if let Some(comp) = &params.compressor {
        compress(&mut chans, comp);
    }
    let mut stereo = match (chans.len(), params.pan) {
        (1, Some(p)) => {
            let (l, r) = ((1.0 - p).min(1.0), (1.0 + p).min(1.0));
            let m = &chans[0];
            vec![m.iter().map(|s| s * l).collect(), m.iter().map(|s| s * r).collect()]
        }
        (1, None) => vec![chans[0].clone(), chans.remove(0)],
        _ => chans,
    };

    if let Some(sends) = sends {
        for (c, ch) in stereo.iter_mut().enumerate() {
            let ret = &sends[c.min(sends.len() - 1)];
            for (s, w) in ch.iter_mut().zip(ret) {
                *s += w;
            }
        }
    }
    limit(&mut stereo, params.limiter_threshold_db);
    AudioBuffer::from_channels(stereo, track.sample_rate())
}

/// Parallel delay + reverb returns from the post-EQ signal, or `None` when dry.
fn send_returns(chans: &[Vec<f32>], params: &FxParams) -> Option<Vec<Vec<f32>>> {
    let d = params.delay.filter(|d| d.wet > 0.0);
    let r = params.reverb.filter(|r| r.wet > 0.0);
    if d.is_none() && r.is_none() {
        return None;
    }
    Some(
        chans
            .iter()
            .map(|c| {
                let mut out = vec![0.0f32; c.len()];
                if let Some(d) = &d {
                    for (o, v) in out.iter_mut().zip(delay(c, d)) {
                        *o += d.wet * v;
                    }
                }
                if let Some(r) = &r {
                    for (o, v) in out.iter_mut().zip(reverb(c, r)) {
                        *o += r.wet * v;
                    }
                }
                out
            })
            .collect(),
    )
}

fn uniform(rng: &mut Rng, lo: f32, hi: f32) -> f32 {
    rng.random_range(lo..=hi)
}

fn sample_eq(rng: &mut Rng) -> Vec<EqBand> {
    vec![
        EqBand {
            kind: FilterKind::LowShelf,
            freq_hz: uniform(rng, 80.0, 300.0),
            gain_db: uniform(rng, -6.0, 6.0),
            q: 0.707,
        },
        EqBand {
            kind: FilterKind::Peak,
            freq_hz: uniform(rng, 300.0, 5000.0),
            gain_db: uniform(rng, -6.0, 6.0),
            q: uniform(rng, 0.5, 2.0),
        },
        EqBand {
            kind: FilterKind::HighShelf,
            freq_hz: uniform(rng, 3000.0, 12_000.0),
            gain_db: uniform(rng, -6.0, 6.0),
            q: 0.707,
        },
    ]
}

/// Draws chain parameters uniformly from the fixed mixing ranges.
pub fn sample_fx_params(rng: &mut Rng, role: TrackRole) -> FxParams {
    if role == TrackRole::Master {
        let eq = sample_eq(rng);
        return FxParams {
            gain_db: 0.0,
            eq,
            compressor: None,
            pan: None,
            limiter_threshold_db: uniform(rng, -1.0, -0.1),
            delay: None,
            reverb: None,
        };
    }
    let gain_db = uniform(rng, -6.0, 3.0);
    let eq = sample_eq(rng);
    let compressor = Some(CompressorParams {
        threshold_db: uniform(rng, -30.0, -10.0),
        ratio: uniform(rng, 1.5, 6.0),
        attack_ms: uniform(rng, 1.0, 30.0),
        release_ms: uniform(rng, 50.0, 300.0),
    });
    let pan = Some(uniform(rng, -0.5, 0.5));
    let limiter_threshold_db = uniform(rng, -3.0, -0.5);
    let delay = Some(DelayParams {
        time_ms: uniform(rng, 60.0, 500.0),
        feedback: uniform(rng, 0.0, 0.5),
        wet: uniform(rng, 0.0, 0.3),
    });
    let reverb = Some(ReverbParams {
        decay_secs: uniform(rng, 0.3, 2.0),
        wet: uniform(rng, 0.0, 0.3),
    });
    FxParams {
        gain_db,
        eq,
        compressor,
        pan,
        limiter_threshold_db,
        delay,
        reverb,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    fn noise(n: usize, seed: u64) -> Vec<f32> {
        let mut rng = SeedTree::new(seed).rng();
        (0..n).map(|_| rng.random_range(-0.9f32..0.9)).collect()
    }

    #[test]
    fn neutral_chain_duplicates_input() {
        let x = noise(20_000, 1);
        let out = apply_fx_chain(&AudioBuffer::mono(x.clone()), &FxParams::neutral()).unwrap();
        assert_eq!(out.num_channels(), 2);
        for ch in out.channels() {
            for (a, b) in ch.iter().zip(&x) {
                assert!((a - b).abs() <= 1e-5);
            }
        }
    }

    #[test]
    fn limiter_bounds_track_output() {
        let x: Vec<f32> = noise(20_000, 2).iter().map(|s| s * 3.0).collect();
        let mut p = FxParams::neutral();
        p.limiter_threshold_db = -3.0;
        p.gain_db = 3.0;
        let out = apply_fx_chain(&AudioBuffer::mono(x), &p).unwrap();
        assert!(out.peak() <= 10f32.powf(-3.0 / 20.0) + 1e-4);
    }

    #[test]
    fn invalid_params_rejected() {
        let x = AudioBuffer::mono(vec![0.0; 10]);
        let mut p = FxParams::neutral();
        p.compressor.as_mut().unwrap().ratio = 0.5;
        assert!(apply_fx_chain(&x, &p).is_err());
        let mut p = FxParams::neutral();
        p.delay.as_mut().unwrap().feedback = 1.0;
        assert!(apply_fx_chain(&x, &p).is_err());
        let mut p = FxParams::neutral();
        p.eq[1].freq_hz = 20_000.0;
        assert!(apply_fx_chain(&x, &p).is_err());
        let mut p = FxParams::neutral();
        p.reverb.as_mut().unwrap().wet = 1.5;
        assert!(apply_fx_chain(&x, &p).is_err());
    }

    #[test]
    fn sampled_params_deterministic_and_valid() {
        for role in [TrackRole::Drum, TrackRole::Instrument, TrackRole::Master] {
            let a = sample_fx_params(&mut SeedTree::new(9).rng(), role);
            let b = sample_fx_params(&mut SeedTree::new(9).rng(), role);
            assert_eq!(a, b);
        }
        for s in 0..1000 {
            for role in [TrackRole::Drum, TrackRole::Instrument, TrackRole::Master] {
                let p = sample_fx_params(&mut SeedTree::new(s).rng(), role);
                p.validate().unwrap();
            }
        }
    }

    #[test]
    fn master_chain_is_eq_and_limiter_only() {
        let p = sample_fx_params(&mut SeedTree::new(3).rng(), TrackRole::Master);
        assert!(p.compressor.is_none());
        assert!(p.pan.is_none());
        assert!(p.delay.is_none() && p.reverb.is_none());
        assert!(!p.eq.is_empty());
        assert!((-1.0..=-0.1).contains(&p.limiter_threshold_db));
    }

    #[test]
    fn hard_pan_silences_one_side() {
        let mut p = FxParams::neutral();
        p.pan = Some(-1.0);
        let out = apply_fx_chain(&AudioBuffer::mono(noise(1000, 4)), &p).unwrap();
        assert!(out.channel(1).iter().all(|&s| s == 0.0));
    }

    #[test]
    fn stereo_master_input_stays_stereo() {
        let input = AudioBuffer::stereo(noise(5000, 5), noise(5000, 6));
        let p = sample_fx_params(&mut SeedTree::new(8).rng(), TrackRole::Master);
        let out = apply_fx_chain(&input, &p).unwrap();
        assert_eq!(out.num_channels(), 2);
        assert_eq!(out.len(), 5000);
        assert!(out.peak() <= 10f32.powf(p.limiter_threshold_db / 20.0) + 1e-4);
    }
}
