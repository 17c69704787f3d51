//! Token-sequence layout: the codebook delay pattern, the onset mask and
//! assembly of (mixture prefix, separator, target) training sequences.
//!
//! Vocabulary per codebook head: data tokens `1..=N`, `PAD = N + 1`,
//! `SEP = N + 2`. Index 0 is never emitted; model heads address token `v`
//! at output row `v - 1`.

use serde::{Deserialize, Serialize};

use crate::codec::TokenGrid;
use crate::error::{Error, Result};

pub fn pad_token(codebook_size: usize) -> u16 {
    (codebook_size + 1) as u16
}

pub fn sep_token(codebook_size: usize) -> u16 {
    (codebook_size + 2) as u16
}

/// Vocabulary size of each head: N data tokens, PAD and SEP.
pub fn vocab_size(codebook_size: usize) -> usize {
    codebook_size + 2
}

/// Dense boolean matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize) -> Self {
        Mask { rows, cols, data: vec![false; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.data[r * self.cols + c] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// `(row, col)` of every true entry in row-major order.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / cols, i % cols))
    }
}

/// Grid after the delay pattern: `(T + K - 1) × K`, codebook `k` shifted down
/// by `k` steps (0-based), PAD elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayedTokens {
    steps: usize,
    codebooks: usize,
    codebook_size: usize,
    data: Vec<u16>,
}

impl DelayedTokens {
    pub fn new(steps: usize, codebooks: usize, codebook_size: usize, data: Vec<u16>) -> Result<Self> {
        if data.len() != steps * codebooks {
            return Err(Error::arg("delayed token data does not match its shape"));
        }
        Ok(DelayedTokens { steps, codebooks, codebook_size, data })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn codebooks(&self) -> usize {
        self.codebooks
    }

    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    pub fn get(&self, s: usize, k: usize) -> u16 {
        self.data[s * self.codebooks + k]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.data
    }

    pub fn pad_count(&self) -> usize {
        let pad = pad_token(self.codebook_size);
        self.data.iter().filter(|&&t| t == pad).count()
    }
}

/// True when 0-based delayed step `s` of codebook `k` holds PAD for a grid of
/// `frames` frames.
pub fn is_pad_position(s: usize, k: usize, frames: usize) -> bool {
    s < k || s >= frames + k
}

pub fn apply_delay(q: &TokenGrid) -> DelayedTokens {
    let (t, k) = (q.frames(), q.codebooks());
    let steps = t + k - 1;
    let pad = pad_token(q.codebook_size());
    let mut data = vec![pad; steps * k];
    for frame in 0..t {
        for cb in 0..k {
            data[(frame + cb) * k + cb] = q.get(frame, cb);
        }
    }
    DelayedTokens { steps, codebooks: k, codebook_size: q.codebook_size(), data }
}

pub fn remove_delay(d: &DelayedTokens, frames: usize, frame_rate: u32) -> Result<TokenGrid> {
    let k = d.codebooks;
    if frames == 0 || d.steps != frames + k - 1 {
        return Err(Error::arg(format!(
            "{} delayed steps cannot hold {frames} frames of {k} codebooks",
            d.steps
        )));
    }
    let pad = pad_token(d.codebook_size);
    for s in 0..d.steps {
        for cb in 0..k {
            let v = d.get(s, cb);
            let pad_here = is_pad_position(s, cb, frames);
            if pad_here && v != pad {
                return Err(Error::corrupt(format!("expected PAD at step {s}, codebook {cb}")));
            }
            if !pad_here && (v == 0 || v as usize > d.codebook_size) {
                return Err(Error::corrupt(format!("token {v} at step {s}, codebook {cb} is not data")));
            }
        }
    }
    let mut data = Vec::with_capacity(frames * k);
    for frame in 0..frames {
        for cb in 0..k {
            data.push(d.get(frame + cb, cb));
        }
    }
    TokenGrid::new(frames, k, d.codebook_size, frame_rate, data)
}

/// `mask(t, k) = t + k <= K + 1` in 1-based indices, over a `frames × K` grid.
pub fn onset_mask(frames: usize, codebooks: usize) -> Mask {
    let mut m = Mask::new(frames, codebooks);
    for t in 1..=frames {
        for k in 1..=codebooks {
            if t + k <= codebooks + 1 {
                m.set(t - 1, k - 1, true);
            }
        }
    }
    m
}

/// Coordinates in which the onset formula is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskCoordinates {
    /// Step index of the delayed sequence (what the model emits).
    #[default]
    Delayed,
    /// Codec frame index before delaying.
    Frame,
}

/// Index sets of one assembled sequence. Masks are indexed by the position
/// of the *predicted* token; the logits that predict step `s` come from step
/// `s - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceLayout {
    pub cond_steps: usize,
    pub sep_step: usize,
    pub target_start: usize,
    pub target_steps: usize,
    pub target_frames: usize,
    pub codebooks: usize,
    pub loss_mask: Mask,
    pub onset_mask: Mask,
}

impl SequenceLayout {
    pub fn total_steps(&self) -> usize {
        self.target_start + self.target_steps
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSequence {
    pub codebook_size: usize,
    /// `steps × K`, row-major.
    pub tokens: Vec<u16>,
    pub layout: SequenceLayout,
}

impl TrainingSequence {
    pub fn steps(&self) -> usize {
        self.layout.total_steps()
    }

    pub fn codebooks(&self) -> usize {
        self.layout.codebooks
    }

    pub fn get(&self, s: usize, k: usize) -> u16 {
        self.tokens[s * self.layout.codebooks + k]
    }
}

/// Delayed mixture tokens followed by one SEP step: the generation prefix.
pub fn condition_prefix(q_mix: &TokenGrid) -> Vec<u16> {
    let mut tokens = apply_delay(q_mix).data;
    let sep = sep_token(q_mix.codebook_size());
    tokens.extend(std::iter::repeat_n(sep, q_mix.codebooks()));
    tokens
}

pub fn build_training_sequence(
    q_mix: &TokenGrid,
    q_target: &TokenGrid,
    coords: MaskCoordinates,
) -> Result<TrainingSequence> {
    let k = q_mix.codebooks();
    let n = q_mix.codebook_size();
    if q_target.codebooks() != k || q_target.codebook_size() != n {
        return Err(Error::arg(format!(
            "mixture grid is K={k}, N={n}; target grid is K={}, N={}",
            q_target.codebooks(),
            q_target.codebook_size()
        )));
    }
    let mut tokens = condition_prefix(q_mix);
    let cond_steps = q_mix.frames() + k - 1;
    let target = apply_delay(q_target);
    tokens.extend_from_slice(&target.data);
    let target_start = cond_steps + 1;
    let total = target_start + target.steps;

    let frames = q_target.frames();
    let mut loss_mask = Mask::new(total, k);
    let mut onset = Mask::new(total, k);
    let formula = onset_mask(frames.max(target.steps), k);
    for s in 0..target.steps {
        for cb in 0..k {
            if is_pad_position(s, cb, frames) {
                continue;
            }
            loss_mask.set(target_start + s, cb, true);
            let hit = match coords {
                MaskCoordinates::Delayed => formula.get(s, cb),
                MaskCoordinates::Frame => formula.get(s - cb, cb),
            };
            if hit {
                onset.set(target_start + s, cb, true);
            }
        }
    }
    Ok(TrainingSequence {
        codebook_size: n,
        tokens,
        layout: SequenceLayout {
            cond_steps,
            sep_step: cond_steps,
            target_start,
            target_steps: target.steps,
            target_frames: frames,
            codebooks: k,
            loss_mask,
            onset_mask: onset,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: usize, k: usize, n: usize) -> TokenGrid {
        let data = (0..t * k).map(|i| (i % n + 1) as u16).collect();
        TokenGrid::new(t, k, n, 100, data).unwrap()
    }

    #[test]
    fn worked_delay_example() {
        // q = [[a1,b1],[a2,b2],[a3,b3]] with a_i = 1,3,5 and b_i = 2,4,6.
        let q = TokenGrid::new(3, 2, 8, 100, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let d = apply_delay(&q);
        let p = pad_token(8);
        assert_eq!(d.as_slice(), &[1, p, 3, 2, 5, 4, p, 6]);
        assert_eq!(d.pad_count(), 2);
    }

    #[test]
    fn single_codebook_has_no_pad() {
        let q = grid(5, 1, 4);
        let d = apply_delay(&q);
        assert_eq!(d.as_slice(), q.as_slice());
        assert_eq!(remove_delay(&d, 5, 100).unwrap(), q);
    }

    #[test]
    fn tampered_pad_is_corruption() {
        let q = grid(4, 3, 10);
        let mut d = apply_delay(&q);
        let idx = 2 * 3 + 1;
        d.data[idx] = pad_token(10);
        assert!(matches!(remove_delay(&d, 4, 100), Err(Error::Corrupt(_))));
        let mut d = apply_delay(&q);
        d.data[1] = 3;
        assert!(matches!(remove_delay(&d, 4, 100), Err(Error::Corrupt(_))));
    }

    #[test]
    fn onset_rows() {
        let m = onset_mask(6, 4);
        assert_eq!(m.count(), 10);
        assert!((0..4).all(|k| m.get(0, k)));
        assert!(m.get(3, 0) && !m.get(3, 1));
        assert!((0..4).all(|k| !m.get(4, k)));
        assert_eq!(onset_mask(3, 1).count(), 1);
    }

    #[test]
    fn sequence_shape_and_masks() {
        let mix = grid(7, 4, 16);
        let tgt = grid(5, 4, 16);
        let seq = build_training_sequence(&mix, &tgt, MaskCoordinates::Delayed).unwrap();
        assert_eq!(seq.steps(), (7 + 3) + 1 + (5 + 3));
        assert_eq!(seq.layout.loss_mask.count(), 5 * 4);
        assert!(seq.layout.onset_mask.is_subset_of(&seq.layout.loss_mask));
        let sep = sep_token(16);
        assert!((0..4).all(|k| seq.get(seq.layout.sep_step, k) == sep));
        let frame = build_training_sequence(&mix, &tgt, MaskCoordinates::Frame).unwrap();
        assert_eq!(frame.layout.onset_mask.count(), 10);
    }

    #[test]
    fn mismatched_grids_rejected() {
        assert!(build_training_sequence(&grid(3, 4, 16), &grid(3, 2, 16), MaskCoordinates::Delayed).is_err());
        assert!(build_training_sequence(&grid(3, 4, 16), &grid(3, 4, 8), MaskCoordinates::Delayed).is_err());
    }
}
