use serde::{Deserialize, Serialize};

use super::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm clip; zero disables clipping.
    pub clip_norm: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8, clip_norm: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub m: Vec<f32>,
    pub v: Vec<f32>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize, config: AdamConfig) -> Self {
        Adam { config, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// One bias-corrected Adam update. Returns the gradient norm before
    /// clipping.
    pub fn step<T: Real>(&mut self, params: &mut [T], grads: &[T], lr: f64) -> f64 {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        let norm = grads.iter().map(|g| g.as_f64() * g.as_f64()).sum::<f64>().sqrt();
        let c = self.config.clip_norm;
        let clip = if c > 0.0 && norm > c { c / norm } else { 1.0 };
        self.t += 1;
        let AdamConfig { beta1, beta2, eps, .. } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let g = g.as_f64() * clip;
            let m1 = beta1 * *m as f64 + (1.0 - beta1) * g;
            let v1 = beta2 * *v as f64 + (1.0 - beta2) * g * g;
            *m = m1 as f32;
            *v = v1 as f32;
            let update = (m1 / bc1) / ((v1 / bc2).sqrt() + eps);
            *p -= T::of(lr * update);
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let mut opt = Adam::new(3, AdamConfig { clip_norm: 0.0, ..Default::default() });
        let mut p = vec![1.0f64, 1.0, 1.0];
        opt.step(&mut p, &[0.5, -2.0, 0.0], 0.1);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] - 1.1).abs() < 1e-6);
        assert_eq!(p[2], 1.0);
    }

    #[test]
    fn zero_lr_leaves_params() {
        let mut opt = Adam::new(2, AdamConfig::default());
        let mut p = vec![0.25f32, -3.0];
        opt.step(&mut p, &[10.0, -7.0], 0.0);
        assert_eq!(p, vec![0.25, -3.0]);
    }

    #[test]
    fn clipping_rescales() {
        let mut a = Adam::new(2, AdamConfig::default());
        let mut b = Adam::new(2, AdamConfig { clip_norm: 0.0, ..Default::default() });
        let mut pa = vec![0.0f64; 2];
        let mut pb = vec![0.0f64; 2];
        let norm = a.step(&mut pa, &[30.0, 40.0], 0.01);
        b.step(&mut pb, &[0.6, 0.8], 0.01);
        assert_eq!(norm, 50.0);
        assert!((a.m[0] - b.m[0]).abs() < 1e-7);
    }
}
