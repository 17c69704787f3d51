//! Autoregressive extraction with a key/value cache.

use ndarray::{s, Array2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::real::Real;
use super::transformer::{gelu, layer_norm, mat, vec1, Transformer};
use crate::codec::TokenGrid;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tokens::{condition_prefix, is_pad_position, pad_token, remove_delay, DelayedTokens};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Sampling {
    Greedy,
    Temperature { temperature: f64, top_k: usize },
}

/// Per-layer keys and values of every step seen so far.
struct KvCache<T> {
    keys: Vec<Array2<T>>,
    values: Vec<Array2<T>>,
    len: usize,
}

impl<T: Real> Transformer<T> {
    fn new_cache(&self) -> KvCache<T> {
        let c = self.config();
        KvCache {
            keys: (0..c.n_layers).map(|_| Array2::zeros((c.max_steps, c.d_model))).collect(),
            values: (0..c.n_layers).map(|_| Array2::zeros((c.max_steps, c.d_model))).collect(),
            len: 0,
        }
    }

    /// Feeds one step and returns the final hidden state at that step.
    fn step_hidden(&self, cache: &mut KvCache<T>, tokens: &[u16]) -> Array2<T> {
        let c = *self.config();
        let lay = self.layout();
        let p = self.params();
        let (d, ff, v, dh) = (c.d_model, c.d_ff, c.vocab(), c.head_dim());
        let pos = cache.len;
        let mut x = Array2::zeros((1, d));
        {
            let mut row = x.row_mut(0);
            row.assign(&vec1(p, lay.pos_emb + pos * d, d));
            for (cb, &tok) in tokens.iter().enumerate() {
                row += &vec1(p, lay.tok_emb + (cb * v + tok as usize - 1) * d, d);
            }
        }
        let scale = T::of(1.0 / (dh as f64).sqrt());
        for (li, l) in lay.layers.iter().enumerate() {
            let (h1, _) = layer_norm(&x, vec1(p, l.ln1_g, d), vec1(p, l.ln1_b, d));
            let mut qkv = h1.dot(&mat(p, l.w_qkv, d, 3 * d));
            qkv.row_mut(0).zip_mut_with(&vec1(p, l.b_qkv, 3 * d), |a, &b| *a += b);
            cache.keys[li].row_mut(pos).assign(&qkv.slice(s![0, d..2 * d]));
            cache.values[li].row_mut(pos).assign(&qkv.slice(s![0, 2 * d..3 * d]));
            let keys = cache.keys[li].slice(s![..=pos, ..]);
            let values = cache.values[li].slice(s![..=pos, ..]);
            let mut attn = Array2::zeros((1, d));
            for h in 0..c.n_heads {
                let q = qkv.slice(s![0, h * dh..(h + 1) * dh]);
                let mut w: ndarray::Array1<T> = keys.slice(s![.., h * dh..(h + 1) * dh]).dot(&q);
                w.mapv_inplace(|x| x * scale);
                let max = w.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
                w.mapv_inplace(|x| (x - max).exp());
                let sum = w.sum();
                w.mapv_inplace(|x| x / sum);
                let out = w.dot(&values.slice(s![.., h * dh..(h + 1) * dh]));
                attn.slice_mut(s![0, h * dh..(h + 1) * dh]).assign(&out);
            }
            let mut a = attn.dot(&mat(p, l.w_o, d, d));
            a.row_mut(0).zip_mut_with(&vec1(p, l.b_o, d), |x, &b| *x += b);
            x += &a;
            let (h2, _) = layer_norm(&x, vec1(p, l.ln2_g, d), vec1(p, l.ln2_b, d));
            let mut u = h2.dot(&mat(p, l.w_1, d, ff));
            u.row_mut(0).zip_mut_with(&vec1(p, l.b_1, ff), |x, &b| *x += b);
            u.mapv_inplace(gelu);
            let mut f = u.dot(&mat(p, l.w_2, ff, d));
            f.row_mut(0).zip_mut_with(&vec1(p, l.b_2, d), |x, &b| *x += b);
            x += &f;
        }
        cache.len += 1;
        layer_norm(&x, vec1(p, lay.lnf_g, d), vec1(p, lay.lnf_b, d)).0
    }

    fn head_row(&self, hidden: &Array2<T>, k: usize) -> Vec<T> {
        let c = self.config();
        let (d, v) = (c.d_model, c.vocab());
        let lay = self.layout();
        let mut out = hidden.dot(&mat(self.params(), lay.head_w + k * d * v, d, v));
        out.row_mut(0).zip_mut_with(&vec1(self.params(), lay.head_b + k * v, v), |x, &b| *x += b);
        out.into_raw_vec_and_offset().0
    }

    /// Next-step logits at each step of `tokens`, computed incrementally.
    /// Matches [`Transformer::forward`] up to rounding.
    pub fn forward_incremental(&self, tokens: &[u16]) -> Result<Vec<Vec<Vec<T>>>> {
        let k = self.config().codebooks;
        let steps = tokens.len() / k;
        if !tokens.len().is_multiple_of(k) || steps > self.config().max_steps {
            return Err(Error::arg("invalid token matrix for the model"));
        }
        let mut cache = self.new_cache();
        Ok(tokens
            .chunks_exact(k)
            .map(|step| {
                let h = self.step_hidden(&mut cache, step);
                (0..k).map(|cb| self.head_row(&h, cb)).collect()
            })
            .collect())
    }

    /// Extracts a `target_frames × K` grid conditioned on a mixture grid.
    pub fn generate(
        &self,
        q_mix: &TokenGrid,
        target_frames: usize,
        sampling: Sampling,
        rng: &mut Rng,
    ) -> Result<TokenGrid> {
        let c = *self.config();
        let k = c.codebooks;
        if q_mix.codebooks() != k || q_mix.codebook_size() != c.codebook_size {
            return Err(Error::arg("mixture grid K/N does not match the model"));
        }
        if target_frames == 0 {
            return Err(Error::arg("target_frames must be positive"));
        }
        let total = c.sequence_steps(q_mix.frames(), target_frames);
        if total > c.max_steps {
            return Err(Error::arg(format!(
                "{total} steps needed but the model supports {}",
                c.max_steps
            )));
        }
        let n = c.codebook_size;
        let pad = pad_token(n);
        let mut cache = self.new_cache();
        let mut hidden = None;
        for step in condition_prefix(q_mix).chunks_exact(k) {
            hidden = Some(self.step_hidden(&mut cache, step));
        }
        let mut hidden = hidden.expect("non-empty prefix");
        let target_steps = target_frames + k - 1;
        let mut out = Vec::with_capacity(target_steps * k);
        for s in 0..target_steps {
            let step: Vec<u16> = (0..k)
                .map(|cb| {
                    if is_pad_position(s, cb, target_frames) {
                        pad
                    } else {
                        let logits = self.head_row(&hidden, cb);
                        sample(&logits[..n], sampling, rng) as u16 + 1
                    }
                })
                .collect();
            if s + 1 < target_steps {
                hidden = self.step_hidden(&mut cache, &step);
            }
            out.extend(step);
        }
        let delayed = DelayedTokens::new(target_steps, k, n, out)?;
        remove_delay(&delayed, target_frames, q_mix.frame_rate())
    }
}

/// Index drawn from `logits` (only data tokens are passed in).
fn sample<T: Real>(logits: &[T], sampling: Sampling, rng: &mut Rng) -> usize {
    let argmax = || {
        let mut best = 0;
        for (i, &x) in logits.iter().enumerate() {
            if x > logits[best] {
                best = i;
            }
        }
        best
    };
    match sampling {
        Sampling::Greedy => argmax(),
        Sampling::Temperature { temperature, top_k } => {
            if temperature <= 0.0 {
                return argmax();
            }
            let mut idx: Vec<usize> = (0..logits.len()).collect();
            idx.sort_by(|&a, &b| logits[b].as_f64().total_cmp(&logits[a].as_f64()).then(a.cmp(&b)));
            let keep = if top_k == 0 { idx.len() } else { top_k.min(idx.len()) };
            idx.truncate(keep);
            let top = logits[idx[0]].as_f64();
            let weights: Vec<f64> = idx
                .iter()
                .map(|&i| ((logits[i].as_f64() - top) / temperature).exp())
                .collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (&i, &w) in idx.iter().zip(&weights) {
                if u < w {
                    return i;
                }
                u -= w;
            }
            idx[keep - 1]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    #[test]
    fn greedy_picks_first_maximum() {
        let mut rng = SeedTree::new(0).rng();
        assert_eq!(sample(&[0.1f32, 0.9, 0.9, 0.2], Sampling::Greedy, &mut rng), 1);
    }

    #[test]
    fn top_one_is_greedy() {
        let mut rng = SeedTree::new(0).rng();
        let s = Sampling::Temperature { temperature: 1.5, top_k: 1 };
        for _ in 0..20 {
            assert_eq!(sample(&[0.1f32, 0.3, 2.0, 0.2], s, &mut rng), 2);
        }
    }

    #[test]
    fn temperature_sampling_frequencies() {
        let mut rng = SeedTree::new(4).rng();
        let logits = [0.0f64, (3.0f64).ln()];
        let s = Sampling::Temperature { temperature: 1.0, top_k: 0 };
        let hits = (0..20_000).filter(|_| sample(&logits, s, &mut rng) == 1).count();
        let frac = hits as f64 / 20_000.0;
        assert!((frac - 0.75).abs() < 0.015, "{frac}");
    }
}
