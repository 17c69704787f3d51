//! Pre-LayerNorm decoder-only transformer with K summed token embeddings per
//! step and K output heads, plus its reverse-mode gradient.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array3, ArrayView1, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng as _;
use rayon::prelude::*;

use super::config::ModelConfig;
use super::loss::{log_softmax_at, LossReport};
use super::params::{init_params, ParamLayout};
use super::real::Real;
use crate::error::{Error, Result};
use crate::rng::{Rng, SeedTree};
use crate::tokens::TrainingSequence;

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

#[derive(Debug, Clone, PartialEq)]
pub struct Transformer<T: Real> {
    config: ModelConfig,
    layout: ParamLayout,
    params: Vec<T>,
}

pub(crate) fn mat<T>(p: &[T], off: usize, r: usize, c: usize) -> ArrayView2<'_, T> {
    ArrayView2::from_shape((r, c), &p[off..off + r * c]).expect("layout")
}

fn mat_mut<T>(p: &mut [T], off: usize, r: usize, c: usize) -> ArrayViewMut2<'_, T> {
    ArrayViewMut2::from_shape((r, c), &mut p[off..off + r * c]).expect("layout")
}

pub(crate) fn vec1<T>(p: &[T], off: usize, n: usize) -> ArrayView1<'_, T> {
    ArrayView1::from(&p[off..off + n])
}

pub(crate) fn gelu<T: Real>(x: T) -> T {
    let c = T::of(GELU_C);
    let half = T::of(0.5);
    half * x * (T::one() + (c * (x + T::of(0.044715) * x * x * x)).tanh())
}

fn gelu_grad<T: Real>(x: T) -> T {
    let c = T::of(GELU_C);
    let half = T::of(0.5);
    let a = T::of(0.044715);
    let t = (c * (x + a * x * x * x)).tanh();
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::of(3.0) * a * x * x)
}

pub(crate) struct LnCache<T> {
    xhat: Array2<T>,
    rstd: Vec<T>,
}

pub(crate) fn layer_norm<T: Real>(x: &Array2<T>, g: ArrayView1<T>, b: ArrayView1<T>) -> (Array2<T>, LnCache<T>) {
    let (rows, d) = x.dim();
    let mut xhat = Array2::zeros((rows, d));
    let mut rstd = Vec::with_capacity(rows);
    let inv_d = T::of(1.0 / d as f64);
    for (xr, mut hr) in x.outer_iter().zip(xhat.outer_iter_mut()) {
        let mean = xr.sum() * inv_d;
        let var = xr.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() * inv_d;
        let r = T::one() / (var + T::of(LN_EPS)).sqrt();
        for (h, &v) in hr.iter_mut().zip(xr) {
            *h = (v - mean) * r;
        }
        rstd.push(r);
    }
    let mut y = xhat.clone();
    for mut row in y.outer_iter_mut() {
        for ((v, &gi), &bi) in row.iter_mut().zip(g).zip(b) {
            *v = *v * gi + bi;
        }
    }
    (y, LnCache { xhat, rstd })
}

fn layer_norm_backward<T: Real>(
    dy: &Array2<T>,
    cache: &LnCache<T>,
    g: ArrayView1<T>,
    dg: &mut [T],
    db: &mut [T],
) -> Array2<T> {
    let (rows, d) = dy.dim();
    let inv_d = T::of(1.0 / d as f64);
    let mut dx = Array2::zeros((rows, d));
    for i in 0..rows {
        let dyr = dy.row(i);
        let xh = cache.xhat.row(i);
        let mut sum_dxh = T::zero();
        let mut sum_dxh_xh = T::zero();
        for j in 0..d {
            dg[j] += dyr[j] * xh[j];
            db[j] += dyr[j];
            let dxh = dyr[j] * g[j];
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xh[j];
        }
        let r = cache.rstd[i];
        let mut dxr = dx.row_mut(i);
        for j in 0..d {
            let dxh = dyr[j] * g[j];
            dxr[j] = r * (dxh - sum_dxh * inv_d - xh[j] * sum_dxh_xh * inv_d);
        }
    }
    dx
}

fn add_bias<T: Real>(x: &mut Array2<T>, b: ArrayView1<T>) {
    for mut row in x.outer_iter_mut() {
        row += &b;
    }
}

fn add_colsum<T: Real>(dst: &mut [T], x: &Array2<T>) {
    for row in x.outer_iter() {
        for (d, &v) in dst.iter_mut().zip(row) {
            *d += v;
        }
    }
}

/// `grad[off] (r×c) += a^T · b`.
fn acc_at_b<T: Real>(grad: &mut [T], off: usize, a: &ArrayView2<T>, b: &ArrayView2<T>) {
    let (r, c) = (a.ncols(), b.ncols());
    let mut dst = mat_mut(grad, off, r, c);
    general_mat_mul(T::one(), &a.t(), b, T::one(), &mut dst);
}

struct LayerTrace<T> {
    ln1: LnCache<T>,
    h1: Array2<T>,
    qkv: Array2<T>,
    probs: Vec<Array2<T>>,
    attn: Array2<T>,
    drop1: Option<Array2<T>>,
    ln2: LnCache<T>,
    h2: Array2<T>,
    u: Array2<T>,
    g: Array2<T>,
    drop2: Option<Array2<T>>,
}

struct Trace<T> {
    layers: Vec<LayerTrace<T>>,
    lnf: LnCache<T>,
    xf: Array2<T>,
}

impl<T: Real> Transformer<T> {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let params = init_params(&config);
        Ok(Transformer { layout: ParamLayout::new(&config), config, params })
    }

    pub fn from_params(config: ModelConfig, params: Vec<T>) -> Result<Self> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        if params.len() != layout.total {
            return Err(Error::arg(format!(
                "expected {} parameters, got {}",
                layout.total,
                params.len()
            )));
        }
        Ok(Transformer { config, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<T> {
        self.params
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    pub fn cast<U: Real>(&self) -> Transformer<U> {
        Transformer {
            config: self.config,
            layout: self.layout.clone(),
            params: self.params.iter().map(|&x| U::of(x.as_f64())).collect(),
        }
    }

    fn check_tokens(&self, tokens: &[u16]) -> Result<usize> {
        let k = self.config.codebooks;
        if !tokens.len().is_multiple_of(k) {
            return Err(Error::arg("token matrix length is not a multiple of K"));
        }
        let steps = tokens.len() / k;
        if steps == 0 || steps > self.config.max_steps {
            return Err(Error::arg(format!(
                "sequence of {steps} steps exceeds model limit of {}",
                self.config.max_steps
            )));
        }
        let v = self.config.vocab();
        if let Some(bad) = tokens.iter().find(|&&t| t == 0 || t as usize > v) {
            return Err(Error::arg(format!("token {bad} outside vocabulary 1..={v}")));
        }
        Ok(steps)
    }

    fn embed(&self, tokens: &[u16], steps: usize) -> Array2<T> {
        let c = &self.config;
        let (d, v, k) = (c.d_model, c.vocab(), c.codebooks);
        let p = &self.params;
        let mut x = Array2::zeros((steps, d));
        for (s, mut row) in x.outer_iter_mut().enumerate() {
            row.assign(&vec1(p, self.layout.pos_emb + s * d, d));
            for cb in 0..k {
                let tok = tokens[s * k + cb] as usize - 1;
                row += &vec1(p, self.layout.tok_emb + (cb * v + tok) * d, d);
            }
        }
        x
    }

    fn dropout_mask(&self, shape: (usize, usize), rng: &mut Option<&mut Rng>) -> Option<Array2<T>> {
        let p = self.config.dropout;
        let rng = rng.as_deref_mut()?;
        if p == 0.0 {
            return None;
        }
        let keep = T::of(1.0 / (1.0 - p));
        Some(Array2::from_shape_fn(shape, |_| if rng.random::<f64>() < p { T::zero() } else { keep }))
    }

    fn attention(&self, qkv: &Array2<T>) -> (Array2<T>, Vec<Array2<T>>) {
        let c = &self.config;
        let (d, dh) = (c.d_model, c.head_dim());
        let steps = qkv.nrows();
        let scale = T::of(1.0 / (dh as f64).sqrt());
        let mut out = Array2::zeros((steps, d));
        let mut probs = Vec::with_capacity(c.n_heads);
        for h in 0..c.n_heads {
            let q = qkv.slice(s![.., h * dh..(h + 1) * dh]);
            let kk = qkv.slice(s![.., d + h * dh..d + (h + 1) * dh]);
            let v = qkv.slice(s![.., 2 * d + h * dh..2 * d + (h + 1) * dh]);
            let mut sc = q.dot(&kk.t());
            for (i, mut row) in sc.outer_iter_mut().enumerate() {
                let mut max = T::neg_infinity();
                for j in 0..=i {
                    row[j] *= scale;
                    max = max.max(row[j]);
                }
                let mut sum = T::zero();
                for j in 0..=i {
                    row[j] = (row[j] - max).exp();
                    sum += row[j];
                }
                for j in 0..=i {
                    row[j] /= sum;
                }
                for j in i + 1..steps {
                    row[j] = T::zero();
                }
            }
            out.slice_mut(s![.., h * dh..(h + 1) * dh]).assign(&sc.dot(&v));
            probs.push(sc);
        }
        (out, probs)
    }

    fn run(&self, tokens: &[u16], steps: usize, mut rng: Option<&mut Rng>) -> Trace<T> {
        let c = &self.config;
        let (d, ff) = (c.d_model, c.d_ff);
        let p = &self.params;
        let mut x = self.embed(tokens, steps);
        let mut layers = Vec::with_capacity(c.n_layers);
        for l in &self.layout.layers {
            let (h1, ln1) = layer_norm(&x, vec1(p, l.ln1_g, d), vec1(p, l.ln1_b, d));
            let mut qkv = h1.dot(&mat(p, l.w_qkv, d, 3 * d));
            add_bias(&mut qkv, vec1(p, l.b_qkv, 3 * d));
            let (attn, probs) = self.attention(&qkv);
            let mut a = attn.dot(&mat(p, l.w_o, d, d));
            add_bias(&mut a, vec1(p, l.b_o, d));
            let drop1 = self.dropout_mask((steps, d), &mut rng);
            if let Some(m) = &drop1 {
                a *= m;
            }
            x += &a;

            let (h2, ln2) = layer_norm(&x, vec1(p, l.ln2_g, d), vec1(p, l.ln2_b, d));
            let mut u = h2.dot(&mat(p, l.w_1, d, ff));
            add_bias(&mut u, vec1(p, l.b_1, ff));
            let g = u.mapv(gelu);
            let mut f = g.dot(&mat(p, l.w_2, ff, d));
            add_bias(&mut f, vec1(p, l.b_2, d));
            let drop2 = self.dropout_mask((steps, d), &mut rng);
            if let Some(m) = &drop2 {
                f *= m;
            }
            x += &f;
            layers.push(LayerTrace { ln1, h1, qkv, probs, attn, drop1, ln2, h2, u, g, drop2 });
        }
        let (xf, lnf) = layer_norm(&x, vec1(p, self.layout.lnf_g, d), vec1(p, self.layout.lnf_b, d));
        Trace { layers, lnf, xf }
    }

    /// Logits of head `k` for the given final hidden rows.
    fn head_logits(&self, rows: &ArrayView2<T>, k: usize) -> Array2<T> {
        let c = &self.config;
        let (d, v) = (c.d_model, c.vocab());
        let mut out = rows.dot(&mat(&self.params, self.layout.head_w + k * d * v, d, v));
        add_bias(&mut out, vec1(&self.params, self.layout.head_b + k * v, v));
        out
    }

    /// Next-step logits at every step, `steps × K × vocab`; row `s` predicts
    /// step `s + 1`. Dropout is off.
    pub fn forward(&self, tokens: &[u16]) -> Result<Array3<T>> {
        let steps = self.check_tokens(tokens)?;
        let trace = self.run(tokens, steps, None);
        let (k, v) = (self.config.codebooks, self.config.vocab());
        let mut out = Array3::zeros((steps, k, v));
        for cb in 0..k {
            let logits = self.head_logits(&trace.xf.view(), cb);
            out.slice_mut(s![.., cb, ..]).assign(&logits);
        }
        Ok(out)
    }

    /// Loss of one sequence without gradients (dropout off).
    pub fn loss(&self, seq: &TrainingSequence, onset_weight: f64) -> Result<LossReport> {
        self.loss_and_grad(seq, onset_weight, None, None)
    }

    /// Loss of one sequence; when `grad` is given, adds d(total)/d(params)
    /// into it. `rng` enables dropout.
    pub fn loss_and_grad(
        &self,
        seq: &TrainingSequence,
        onset_weight: f64,
        rng: Option<&mut Rng>,
        grad: Option<&mut [T]>,
    ) -> Result<LossReport> {
        let c = &self.config;
        if seq.codebooks() != c.codebooks || seq.codebook_size != c.codebook_size {
            return Err(Error::arg("sequence K/N does not match the model"));
        }
        let steps = self.check_tokens(&seq.tokens)?;
        let (d, v, k) = (c.d_model, c.vocab(), c.codebooks);
        let layout = &seq.layout;
        let n_full = layout.loss_mask.count();
        if n_full == 0 {
            return Err(Error::arg("sequence has an empty loss mask"));
        }
        if layout.loss_mask.ones().any(|(s, _)| s == 0) {
            return Err(Error::arg("step 0 has no predicting position"));
        }
        let n_onset = layout.onset_mask.count();
        let trace = self.run(&seq.tokens, steps, rng);

        // Positions whose logits feed the loss, and their row in the selection.
        let mut row_of = vec![usize::MAX; steps];
        let mut positions = Vec::new();
        for (s, _) in layout.loss_mask.ones() {
            if row_of[s - 1] == usize::MAX {
                row_of[s - 1] = positions.len();
                positions.push(s - 1);
            }
        }
        let xsel = trace.xf.select(Axis(0), &positions);

        let want_grad = grad.is_some();
        let mut full_sum = 0.0;
        let mut onset_sum = 0.0;
        let mut dxsel = Array2::<T>::zeros(xsel.dim());
        let mut head_grads = Vec::new();
        for cb in 0..k {
            let logits = self.head_logits(&xsel.view(), cb);
            let mut dlogits = Array2::<T>::zeros(logits.dim());
            let mut probs = vec![T::zero(); v];
            for (row, &pos) in positions.iter().enumerate() {
                let s = pos + 1;
                if !layout.loss_mask.get(s, cb) {
                    continue;
                }
                let target = seq.get(s, cb) as usize - 1;
                let lrow = logits.row(row);
                let lp = log_softmax_at(lrow.as_slice().expect("contiguous"), target, Some(&mut probs));
                let onset = layout.onset_mask.get(s, cb);
                full_sum -= lp;
                if onset {
                    onset_sum -= lp;
                }
                if want_grad {
                    let mut coef = 1.0 / n_full as f64;
                    if onset {
                        coef += onset_weight / n_onset as f64;
                    }
                    let coef = T::of(coef);
                    let mut drow = dlogits.row_mut(row);
                    for (j, &pj) in probs.iter().enumerate() {
                        drow[j] = coef * (pj - if j == target { T::one() } else { T::zero() });
                    }
                }
            }
            if want_grad {
                let w = mat(&self.params, self.layout.head_w + cb * d * v, d, v);
                general_mat_mul(T::one(), &dlogits, &w.t(), T::one(), &mut dxsel);
                head_grads.push(dlogits);
            }
        }
        let onset = if n_onset > 0 { onset_sum / n_onset as f64 } else { 0.0 };
        let report = LossReport::new(full_sum / n_full as f64, onset, onset_weight);

        if let Some(grad) = grad {
            if grad.len() != self.layout.total {
                return Err(Error::arg("gradient buffer has the wrong length"));
            }
            for (cb, dl) in head_grads.iter().enumerate() {
                acc_at_b(grad, self.layout.head_w + cb * d * v, &xsel.view(), &dl.view());
                add_colsum(&mut grad[self.layout.head_b + cb * v..self.layout.head_b + (cb + 1) * v], dl);
            }
            let mut dxf = Array2::<T>::zeros((steps, d));
            for (row, &pos) in positions.iter().enumerate() {
                dxf.row_mut(pos).assign(&dxsel.row(row));
            }
            self.backward(&seq.tokens, &trace, dxf, grad);
        }
        Ok(report)
    }

    fn backward(&self, tokens: &[u16], trace: &Trace<T>, dxf: Array2<T>, grad: &mut [T]) {
        let c = &self.config;
        let (d, ff, v, k) = (c.d_model, c.d_ff, c.vocab(), c.codebooks);
        let p = &self.params;
        let lay = &self.layout;
        let (dg, db) = split_pair(grad, lay.lnf_g, lay.lnf_b, d);
        let mut dx = layer_norm_backward(&dxf, &trace.lnf, vec1(p, lay.lnf_g, d), dg, db);

        for (l, t) in lay.layers.iter().zip(&trace.layers).rev() {
            // Feed-forward branch.
            let mut df = dx.clone();
            if let Some(m) = &t.drop2 {
                df *= m;
            }
            acc_at_b(grad, l.w_2, &t.g.view(), &df.view());
            add_colsum(&mut grad[l.b_2..l.b_2 + d], &df);
            let mut du = df.dot(&mat(p, l.w_2, ff, d).t());
            du.zip_mut_with(&t.u, |g, &u| *g *= gelu_grad(u));
            acc_at_b(grad, l.w_1, &t.h2.view(), &du.view());
            add_colsum(&mut grad[l.b_1..l.b_1 + ff], &du);
            let dh2 = du.dot(&mat(p, l.w_1, d, ff).t());
            let (dg, db) = split_pair(grad, l.ln2_g, l.ln2_b, d);
            dx += &layer_norm_backward(&dh2, &t.ln2, vec1(p, l.ln2_g, d), dg, db);

            // Attention branch.
            let mut da = dx.clone();
            if let Some(m) = &t.drop1 {
                da *= m;
            }
            acc_at_b(grad, l.w_o, &t.attn.view(), &da.view());
            add_colsum(&mut grad[l.b_o..l.b_o + d], &da);
            let dattn = da.dot(&mat(p, l.w_o, d, d).t());
            let dqkv = self.attention_backward(&t.qkv, &t.probs, &dattn);
            acc_at_b(grad, l.w_qkv, &t.h1.view(), &dqkv.view());
            add_colsum(&mut grad[l.b_qkv..l.b_qkv + 3 * d], &dqkv);
            let dh1 = dqkv.dot(&mat(p, l.w_qkv, d, 3 * d).t());
            let (dg, db) = split_pair(grad, l.ln1_g, l.ln1_b, d);
            dx += &layer_norm_backward(&dh1, &t.ln1, vec1(p, l.ln1_g, d), dg, db);
        }

        for (s, row) in dx.outer_iter().enumerate() {
            let off = lay.pos_emb + s * d;
            for (g, &x) in grad[off..off + d].iter_mut().zip(row) {
                *g += x;
            }
            for cb in 0..k {
                let tok = tokens[s * k + cb] as usize - 1;
                let off = lay.tok_emb + (cb * v + tok) * d;
                for (g, &x) in grad[off..off + d].iter_mut().zip(row) {
                    *g += x;
                }
            }
        }
    }

    fn attention_backward(&self, qkv: &Array2<T>, probs: &[Array2<T>], dattn: &Array2<T>) -> Array2<T> {
        let c = &self.config;
        let (d, dh) = (c.d_model, c.head_dim());
        let scale = T::of(1.0 / (dh as f64).sqrt());
        let mut dqkv = Array2::zeros(qkv.dim());
        for (h, p) in probs.iter().enumerate() {
            let q = qkv.slice(s![.., h * dh..(h + 1) * dh]);
            let kk = qkv.slice(s![.., d + h * dh..d + (h + 1) * dh]);
            let v = qkv.slice(s![.., 2 * d + h * dh..2 * d + (h + 1) * dh]);
            let dout = dattn.slice(s![.., h * dh..(h + 1) * dh]);
            let dv = p.t().dot(&dout);
            let mut ds = dout.dot(&v.t());
            for (mut drow, prow) in ds.outer_iter_mut().zip(p.outer_iter()) {
                let dot: T = drow.iter().zip(prow).map(|(&a, &b)| a * b).sum();
                for (x, &pj) in drow.iter_mut().zip(prow) {
                    *x = pj * (*x - dot) * scale;
                }
            }
            let dq = ds.dot(&kk);
            let dk = ds.t().dot(&q);
            dqkv.slice_mut(s![.., h * dh..(h + 1) * dh]).assign(&dq);
            dqkv.slice_mut(s![.., d + h * dh..d + (h + 1) * dh]).assign(&dk);
            dqkv.slice_mut(s![.., 2 * d + h * dh..2 * d + (h + 1) * dh]).assign(&dv);
        }
        dqkv
    }

    /// Mean loss and mean gradient over a batch, computed in parallel.
    /// `dropout` seeds per-sequence dropout masks; `None` disables dropout.
    pub fn batch_loss_and_grad(
        &self,
        batch: &[&TrainingSequence],
        onset_weight: f64,
        dropout: Option<SeedTree>,
    ) -> Result<(LossReport, Vec<T>)> {
        if batch.is_empty() {
            return Err(Error::arg("empty batch"));
        }
        let n = self.layout.total;
        // Per-sequence gradients are summed in batch order so the result does
        // not depend on the thread count.
        let parts: Vec<(LossReport, Vec<T>)> = batch
            .par_iter()
            .enumerate()
            .map(|(i, seq)| {
                let mut g = vec![T::zero(); n];
                let mut rng = dropout.map(|s| s.index(i as u64).rng());
                let r = self.loss_and_grad(seq, onset_weight, rng.as_mut(), Some(&mut g))?;
                Ok((r, g))
            })
            .collect::<Result<_>>()?;
        let mut grad = vec![T::zero(); n];
        let mut reports = Vec::with_capacity(parts.len());
        for (r, g) in parts {
            grad.iter_mut().zip(&g).for_each(|(a, &b)| *a += b);
            reports.push(r);
        }
        let scale = T::of(1.0 / batch.len() as f64);
        let grad = grad.into_iter().map(|g| g * scale).collect();
        Ok((LossReport::mean(&reports), grad))
    }
}

/// Two disjoint mutable `d`-length slices of `grad` at offsets `a < b`.
fn split_pair<T>(grad: &mut [T], a: usize, b: usize, d: usize) -> (&mut [T], &mut [T]) {
    let (lo, hi) = grad.split_at_mut(b);
    (&mut lo[a..a + d], &mut hi[..d])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gelu_derivative_matches_difference() {
        for x in [-3.0f64, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let num = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((num - gelu_grad(x)).abs() < 1e-8, "{x}");
        }
    }

    #[test]
    fn layer_norm_rows_standardized() {
        let x = Array2::from_shape_fn((3, 6), |(i, j)| (i * 7 + j * j) as f64);
        let g = ndarray::Array1::ones(6);
        let b = ndarray::Array1::zeros(6);
        let (y, _) = layer_norm(&x, g.view(), b.view());
        for row in y.outer_iter() {
            assert!(row.mean().unwrap().abs() < 1e-12);
            let var = row.iter().map(|v| v * v).sum::<f64>() / 6.0;
            assert!((var - 1.0).abs() < 1e-3);
        }
    }
}
