//! Feedback delay and a Schroeder reverb (four parallel combs, two series all-passes).

use serde::{Deserialize, Serialize};

use crate::audio::SAMPLE_RATE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayParams {
    pub time_ms: f32,
    pub feedback: f32,
    pub wet: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReverbParams {
    pub decay_secs: f32,
    pub wet: f32,
}

const COMB_DELAYS: [usize; 4] = [1116, 1188, 1277, 1356];
const ALLPASS_DELAYS: [usize; 2] = [556, 441];
const ALLPASS_GAIN: f32 = 0.5;

/// Wet output only: `y[n] = x[n-D] + fb * y[n-D]`.
pub fn delay(x: &[f32], p: &DelayParams) -> Vec<f32> {
    let d = ((p.time_ms * 1e-3 * SAMPLE_RATE as f32).round() as usize).max(1);
    let mut y = vec![0.0f32; x.len()];
    for n in d..x.len() {
        y[n] = x[n - d] + p.feedback * y[n - d];
    }
    y
}

/// Wet output only. Comb feedback gains give a 60 dB decay over `decay_secs`.
pub fn reverb(x: &[f32], p: &ReverbParams) -> Vec<f32> {
    let mut acc = vec![0.0f32; x.len()];
    for &d in &COMB_DELAYS {
        let g = 10f32.powf(-3.0 * d as f32 / (p.decay_secs * SAMPLE_RATE as f32));
        let mut line = vec![0.0f32; x.len()];
        for n in 0..x.len() {
            let fb = if n >= d { line[n - d] } else { 0.0 };
            line[n] = x[n] + g * fb;
            acc[n] += if n >= d { line[n - d] } else { 0.0 } * 0.25;
        }
    }
    for &d in &ALLPASS_DELAYS {
        let input = acc.clone();
        for n in 0..input.len() {
            let x_d = if n >= d { input[n - d] } else { 0.0 };
            let y_d = if n >= d { acc[n - d] } else { 0.0 };
            acc[n] = -ALLPASS_GAIN * input[n] + x_d + ALLPASS_GAIN * y_d;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(n: usize) -> Vec<f32> {
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        x
    }

    #[test]
    fn delay_echoes_decay_by_feedback() {
        let y = delay(&impulse(10_000), &DelayParams { time_ms: 50.0, feedback: 0.5, wet: 1.0 });
        let d = 2205;
        assert_eq!(y[d], 1.0);
        assert_eq!(y[2 * d], 0.5);
        assert_eq!(y[3 * d], 0.25);
        assert_eq!(y[d - 1], 0.0);
    }

    #[test]
    fn reverb_tail_is_stable_and_decays() {
        let y = reverb(&impulse(3 * 44_100), &ReverbParams { decay_secs: 1.0, wet: 1.0 });
        assert!(y.iter().all(|v| v.is_finite()));
        let energy = |r: std::ops::Range<usize>| y[r].iter().map(|v| v * v).sum::<f32>();
        let early = energy(0..22_050);
        let late = energy(44_100..66_150);
        // One second later the tail should be roughly 60 dB down in amplitude.
        assert!(late < early * 1e-4, "{early} {late}");
        assert!(early > 0.0);
    }
}
