use std::ops::Range;

use rand_distr::{Distribution, Normal};

use super::config::ModelConfig;
use super::real::Real;
use crate::rng::SeedTree;

const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerOffsets {
    pub ln1_g: usize,
    pub ln1_b: usize,
    /// d × 3d, columns are [q | k | v].
    pub w_qkv: usize,
    pub b_qkv: usize,
    pub w_o: usize,
    pub b_o: usize,
    pub ln2_g: usize,
    pub ln2_b: usize,
    pub w_1: usize,
    pub b_1: usize,
    pub w_2: usize,
    pub b_2: usize,
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    /// K × vocab × d.
    pub tok_emb: usize,
    /// max_steps × d.
    pub pos_emb: usize,
    pub layers: Vec<LayerOffsets>,
    pub lnf_g: usize,
    pub lnf_b: usize,
    /// K × d × vocab.
    pub head_w: usize,
    /// K × vocab.
    pub head_b: usize,
    pub total: usize,
}

impl ParamLayout {
    pub fn new(c: &ModelConfig) -> Self {
        let (d, ff, v, k) = (c.d_model, c.d_ff, c.vocab(), c.codebooks);
        let mut at = 0;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        let tok_emb = take(k * v * d);
        let pos_emb = take(c.max_steps * d);
        let layers = (0..c.n_layers)
            .map(|_| LayerOffsets {
                ln1_g: take(d),
                ln1_b: take(d),
                w_qkv: take(d * 3 * d),
                b_qkv: take(3 * d),
                w_o: take(d * d),
                b_o: take(d),
                ln2_g: take(d),
                ln2_b: take(d),
                w_1: take(d * ff),
                b_1: take(ff),
                w_2: take(ff * d),
                b_2: take(d),
            })
            .collect();
        let lnf_g = take(d);
        let lnf_b = take(d);
        let head_w = take(k * d * v);
        let head_b = take(k * v);
        ParamLayout { tok_emb, pos_emb, layers, lnf_g, lnf_b, head_w, head_b, total: at }
    }

    /// Named ranges covering the whole vector in order.
    pub fn segments(&self, c: &ModelConfig) -> Vec<(String, Range<usize>)> {
        let (d, ff, v, k) = (c.d_model, c.d_ff, c.vocab(), c.codebooks);
        let mut out = vec![
            ("tok_emb".to_string(), self.tok_emb..self.tok_emb + k * v * d),
            ("pos_emb".to_string(), self.pos_emb..self.pos_emb + c.max_steps * d),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            for (name, off, len) in [
                ("ln1_g", l.ln1_g, d),
                ("ln1_b", l.ln1_b, d),
                ("w_qkv", l.w_qkv, 3 * d * d),
                ("b_qkv", l.b_qkv, 3 * d),
                ("w_o", l.w_o, d * d),
                ("b_o", l.b_o, d),
                ("ln2_g", l.ln2_g, d),
                ("ln2_b", l.ln2_b, d),
                ("w_1", l.w_1, d * ff),
                ("b_1", l.b_1, ff),
                ("w_2", l.w_2, ff * d),
                ("b_2", l.b_2, d),
            ] {
                out.push((format!("layer{i}.{name}"), off..off + len));
            }
        }
        out.push(("lnf_g".to_string(), self.lnf_g..self.lnf_g + d));
        out.push(("lnf_b".to_string(), self.lnf_b..self.lnf_b + d));
        out.push(("head_w".to_string(), self.head_w..self.head_w + k * d * v));
        out.push(("head_b".to_string(), self.head_b..self.head_b + k * v));
        out
    }
}

pub fn param_count(c: &ModelConfig) -> usize {
    ParamLayout::new(c).total
}

/// Seeded initialization: N(0, 0.02) weights and embeddings, residual output
/// projections scaled by 1/sqrt(2 * layers), unit LayerNorm gains, zero biases.
pub fn init_params<T: Real>(c: &ModelConfig) -> Vec<T> {
    let layout = ParamLayout::new(c);
    let mut p = vec![T::zero(); layout.total];
    let root = SeedTree::new(c.seed).child("model-init");
    let residual_std = INIT_STD / (2.0 * c.n_layers as f64).sqrt();
    for (name, range) in layout.segments(c) {
        let leaf = name.rsplit('.').next().unwrap_or(&name);
        let std = match leaf {
            "ln1_g" | "ln2_g" | "lnf_g" => {
                p[range].iter_mut().for_each(|x| *x = T::one());
                continue;
            }
            n if n.starts_with("b_") || n.ends_with("_b") || n == "head_b" => continue,
            "w_o" | "w_2" => residual_std,
            _ => INIT_STD,
        };
        let dist = Normal::new(0.0, std).expect("positive std");
        let mut rng = root.child(&name).rng();
        for x in &mut p[range] {
            *x = T::of(dist.sample(&mut rng));
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig {
            d_model: 8,
            n_layers: 2,
            n_heads: 2,
            d_ff: 16,
            max_steps: 10,
            codebooks: 2,
            codebook_size: 5,
            dropout: 0.0,
            seed: 1,
        }
    }

    #[test]
    fn count_matches_closed_form() {
        let c = tiny();
        let (d, ff, v, k, l) = (8, 16, 7, 2, 2);
        let per_layer = 2 * d + 3 * d * d + 3 * d + d * d + d + 2 * d + d * ff + ff + ff * d + d;
        let expect = k * v * d + 10 * d + l * per_layer + 2 * d + k * d * v + k * v;
        assert_eq!(param_count(&c), expect);
    }

    #[test]
    fn segments_tile_the_vector() {
        let c = tiny();
        let layout = ParamLayout::new(&c);
        let mut at = 0;
        for (_, r) in layout.segments(&c) {
            assert_eq!(r.start, at);
            at = r.end;
        }
        assert_eq!(at, layout.total);
    }

    #[test]
    fn init_is_seeded_and_structured() {
        let c = tiny();
        let a: Vec<f32> = init_params(&c);
        assert_eq!(a, init_params::<f32>(&c));
        let layout = ParamLayout::new(&c);
        assert!(a[layout.lnf_g..layout.lnf_g + 8].iter().all(|&x| x == 1.0));
        assert!(a[layout.head_b..layout.total].iter().all(|&x| x == 0.0));
        let other: Vec<f32> = init_params(&ModelConfig { seed: 2, ..c });
        assert_ne!(a, other);
    }
}
