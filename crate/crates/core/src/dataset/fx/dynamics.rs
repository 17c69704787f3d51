//! Compressor and limiter. Both operate on linked channels: the detector sees
//! the per-sample maximum across channels and one gain is applied to all.

use serde::{Deserialize, Serialize};

use crate::audio::SAMPLE_RATE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressorParams {
    pub threshold_db: f32,
    pub ratio: f32,
    pub attack_ms: f32,
    pub release_ms: f32,
}

fn coef(ms: f32) -> f64 {
    if ms <= 0.0 {
        return 0.0;
    }
    (-1.0 / (ms as f64 * 1e-3 * SAMPLE_RATE as f64)).exp()
}

fn linked_peak(channels: &[Vec<f32>], i: usize) -> f64 {
    channels.iter().fold(0.0f64, |m, c| m.max(c[i].abs() as f64))
}

/// Feed-forward hard-knee compressor.
///
/// Level detection is a peak follower with instant attack and the release
/// time constant; the static curve `out = thr + (in - thr) / ratio` gives a
/// target gain in dB, which is smoothed with the attack/release constants.
pub fn compress(channels: &mut [Vec<f32>], p: &CompressorParams) {
    if p.ratio == 1.0 || channels.is_empty() {
        return;
    }
    let (att, rel) = (coef(p.attack_ms), coef(p.release_ms));
    let thr = p.threshold_db as f64;
    let thr_lin = 10f64.powf(thr / 20.0);
    let slope = 1.0 - 1.0 / p.ratio as f64;
    let mut env = 0.0f64;
    let mut gain_db = 0.0f64;
    for i in 0..channels[0].len() {
        let x = linked_peak(channels, i);
        env = if x > env { x } else { rel * env + (1.0 - rel) * x };
        let target = if env > thr_lin { -(20.0 * env.log10() - thr) * slope } else { 0.0 };
        let c = if target < gain_db { att } else { rel };
        gain_db = c * gain_db + (1.0 - c) * target;
        // Snap the tail of a release to exact unity instead of decaying
        // through subnormals.
        if gain_db.abs() < 1e-9 {
            gain_db = 0.0;
            continue;
        }
        let g = 10f64.powf(gain_db / 20.0);
        for ch in channels.iter_mut() {
            ch[i] = (ch[i] as f64 * g) as f32;
        }
    }
}

const LIMITER_ATTACK_MS: f32 = 1.5;
const LIMITER_RELEASE_MS: f32 = 60.0;

/// Brickwall limiter: the applied gain never exceeds `threshold / |x|`, so the
/// output peak is at most the threshold amplitude.
///
/// The required gain curve is smoothed by a forward release pass and a
/// backward linear attack ramp (lookahead); both only ever lower the gain.
pub fn limit(channels: &mut [Vec<f32>], threshold_db: f32) {
    if channels.is_empty() {
        return;
    }
    let n = channels[0].len();
    let thr = 10f64.powf(threshold_db as f64 / 20.0);
    let required: Vec<f64> = (0..n)
        .map(|i| {
            let x = linked_peak(channels, i);
            if x > thr { thr / x } else { 1.0 }
        })
        .collect();
    if required.iter().all(|&g| g == 1.0) {
        return;
    }

    let rel = coef(LIMITER_RELEASE_MS);
    let mut gain = vec![1.0f64; n];
    let mut g = 1.0f64;
    for i in 0..n {
        g = (rel * g + (1.0 - rel)).min(required[i]);
        gain[i] = g;
    }
    let step = 1.0 / (LIMITER_ATTACK_MS as f64 * 1e-3 * SAMPLE_RATE as f64);
    for i in (0..n.saturating_sub(1)).rev() {
        gain[i] = gain[i].min(gain[i + 1] + step);
    }
    for ch in channels.iter_mut() {
        for (s, g) in ch.iter_mut().zip(&gain) {
            let y = *s as f64 * g;
            // Guard the float32 cast against rounding just above the ceiling.
            *s = (y.clamp(-thr, thr)) as f32;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_db(level_db: f32, secs: f32) -> Vec<f32> {
        let amp = 10f32.powf(level_db / 20.0);
        (0..(secs * 44_100.0) as usize)
            .map(|i| amp * (2.0 * std::f32::consts::PI * 1000.0 * i as f32 / 44_100.0).sin())
            .collect()
    }

    fn peak_db(x: &[f32]) -> f32 {
        20.0 * x.iter().fold(0.0f32, |m, s| m.max(s.abs())).log10()
    }

    #[test]
    fn steady_state_follows_static_curve() {
        // out = thr + (in - thr) / ratio = -20 + 10 / 4 = -17.5 dB
        for (attack, release) in [(1.0, 50.0), (10.0, 100.0), (30.0, 300.0)] {
            let mut ch = vec![sine_db(-10.0, 2.0)];
            let p = CompressorParams { threshold_db: -20.0, ratio: 4.0, attack_ms: attack, release_ms: release };
            compress(&mut ch, &p);
            let level = peak_db(&ch[0][66_150..]);
            assert!((level + 17.5).abs() <= 0.5, "attack {attack}: {level}");
        }
    }

    #[test]
    fn below_threshold_untouched() {
        let x = sine_db(-30.0, 0.5);
        let mut ch = vec![x.clone()];
        compress(&mut ch, &CompressorParams { threshold_db: -20.0, ratio: 4.0, attack_ms: 5.0, release_ms: 100.0 });
        for (a, b) in ch[0].iter().zip(&x) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn limiter_ceiling_holds() {
        let mut ch = vec![sine_db(6.0, 0.5), sine_db(3.0, 0.5)];
        limit(&mut ch, -3.0);
        let ceiling = 10f32.powf(-3.0 / 20.0);
        assert!(ch.iter().flatten().all(|s| s.abs() <= ceiling + 1e-4));
    }

    #[test]
    fn limiter_is_transparent_below_threshold() {
        let x = sine_db(-1.0, 0.2);
        let mut ch = vec![x.clone()];
        limit(&mut ch, 0.0);
        assert_eq!(ch[0], x);
    }
}
