use serde::{Deserialize, Serialize};

use super::real::Real;

/// Masked mean cross-entropies of one sequence (or the mean over a batch).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossReport {
    pub full_length: f64,
    pub onset: f64,
    /// Weight of the onset term: 1 for the full objective, 0 for the ablation.
    pub onset_weight: f64,
    /// `full_length + onset_weight * onset`.
    pub total: f64,
}

impl LossReport {
    pub fn new(full_length: f64, onset: f64, onset_weight: f64) -> Self {
        LossReport { full_length, onset, onset_weight, total: full_length + onset_weight * onset }
    }

    pub(crate) fn mean(reports: &[LossReport]) -> LossReport {
        let n = reports.len().max(1) as f64;
        let full = reports.iter().map(|r| r.full_length).sum::<f64>() / n;
        let onset = reports.iter().map(|r| r.onset).sum::<f64>() / n;
        let w = reports.first().map_or(1.0, |r| r.onset_weight);
        LossReport::new(full, onset, w)
    }
}

/// Log-softmax of `logits` evaluated at `target`, computed stably; also
/// writes the softmax into `probs` when given.
pub fn log_softmax_at<T: Real>(logits: &[T], target: usize, probs: Option<&mut [T]>) -> f64 {
    let max = logits.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    let sum: T = logits.iter().map(|&x| (x - max).exp()).sum();
    let lse = max + sum.ln();
    if let Some(p) = probs {
        for (pi, &x) in p.iter_mut().zip(logits) {
            *pi = (x - lse).exp();
        }
    }
    (logits[target] - lse).as_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additivity_is_exact() {
        let r = LossReport::new(1.2345678, 0.3141592, 1.0);
        assert_eq!(r.total, r.full_length + r.onset);
        let r = LossReport::new(1.2345678, 0.3141592, 0.0);
        assert_eq!(r.total, r.full_length);
    }

    #[test]
    fn uniform_logits() {
        let l = vec![0.5f64; 7];
        assert!((log_softmax_at(&l, 3, None) + 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hand_computed() {
        // logits (1, 2, 3), target 0: -ln(e / (e + e^2 + e^3)).
        let l = [1.0f64, 2.0, 3.0];
        let e = std::f64::consts::E;
        let expect = (e / (e + e * e + e * e * e)).ln();
        assert!((log_softmax_at(&l, 0, None) - expect).abs() < 1e-12);
    }
}
