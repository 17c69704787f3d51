//! Duration-preserving pitch shift: resample by the pitch ratio, then
//! overlap-add time-stretch back to the original length.

use std::f32::consts::PI;

const FRAME: usize = 1024;
const HOP: usize = FRAME / 2;

/// Shifts pitch by an integer number of semitones. Output length equals input
/// length; a shift of zero returns the input unchanged.
pub fn pitch_shift(x: &[f32], semitones: i32) -> Vec<f32> {
    if semitones == 0 || x.is_empty() {
        return x.to_vec();
    }
    let ratio = 2f64.powf(semitones as f64 / 12.0);
    let resampled = resample(x, ratio);
    time_stretch(&resampled, x.len())
}

/// Reads `x` at `ratio` samples per output sample with linear interpolation.
fn resample(x: &[f32], ratio: f64) -> Vec<f32> {
    let out_len = (((x.len() - 1) as f64 / ratio).floor() as usize + 1).max(1);
    (0..out_len)
        .map(|n| {
            let pos = n as f64 * ratio;
            let i = pos.floor() as usize;
            let frac = (pos - i as f64) as f32;
            let a = x[i.min(x.len() - 1)];
            let b = x[(i + 1).min(x.len() - 1)];
            a + (b - a) * frac
        })
        .collect()
}

/// Overlap-add time stretch of `x` to exactly `out_len` samples using a
/// periodic Hann window at 50% synthesis overlap. Each analysis frame is
/// shifted by up to `TOLERANCE` samples to best match the natural
/// continuation of the previous frame (WSOLA).
pub fn time_stretch(x: &[f32], out_len: usize) -> Vec<f32> {
    if x.is_empty() || out_len == 0 {
        return vec![0.0; out_len];
    }
    let window: Vec<f32> = (0..FRAME)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f32 / FRAME as f32).cos())
        .collect();
    let analysis_hop = HOP as f64 * x.len() as f64 / out_len as f64;
    let frames = out_len / HOP + 2;

    // Zero margin so every frame and search offset is an in-bounds slice.
    let margin = FRAME + TOLERANCE as usize + 8;
    let reach = (frames as f64 * analysis_hop).ceil() as usize + FRAME;
    let mut padded = vec![0.0f32; margin + x.len().max(reach) + margin];
    padded[margin..margin + x.len()].copy_from_slice(x);
    let origin = margin as isize;

    let mut out = vec![0.0f32; out_len + FRAME];
    let mut norm = vec![0.0f32; out_len + FRAME];
    let mut prev_in: Option<isize> = None;
    for m in 0..frames {
        // Frames are centred: frame m covers output [m*HOP - FRAME/2, ...).
        let out_start = (m * HOP) as isize - (FRAME / 2) as isize;
        let nominal = (m as f64 * analysis_hop).round() as isize - (FRAME / 2) as isize;
        let in_start = match prev_in {
            Some(p) if analysis_hop as usize != HOP => {
                best_alignment(&padded, origin + p + HOP as isize, origin + nominal) - origin
            }
            _ => nominal,
        };
        prev_in = Some(in_start);
        let src = &padded[(origin + in_start) as usize..(origin + in_start) as usize + FRAME];
        for (i, (&w, &s)) in window.iter().zip(src).enumerate() {
            let o = out_start + i as isize;
            if o < 0 || o as usize >= out.len() {
                continue;
            }
            out[o as usize] += w * s;
            norm[o as usize] += w;
        }
    }
    out.truncate(out_len);
    for (o, n) in out.iter_mut().zip(&norm) {
        if *n > 1e-3 {
            *o /= n;
        }
    }
    out
}

const TOLERANCE: isize = 256;

/// Start near `nominal` (within `TOLERANCE`) whose first half-frame best
/// correlates with the half-frame at `continuation`. Indices are into `x`.
fn best_alignment(x: &[f32], continuation: isize, nominal: isize) -> isize {
    let template = &x[continuation as usize..continuation as usize + HOP];
    let score = |c: isize| -> f32 {
        let cand = &x[c as usize..c as usize + HOP];
        template.iter().zip(cand).map(|(a, b)| a * b).sum()
    };
    let pick = |range: &mut dyn Iterator<Item = isize>, fallback: isize| {
        let mut best = fallback;
        let mut best_score = f32::NEG_INFINITY;
        for c in range {
            let s = score(c);
            if s > best_score {
                best_score = s;
                best = c;
            }
        }
        best
    };
    let coarse = pick(&mut (-TOLERANCE..=TOLERANCE).step_by(4).map(|d| nominal + d), nominal);
    pick(&mut (coarse - 3..=coarse + 3), coarse)
}
