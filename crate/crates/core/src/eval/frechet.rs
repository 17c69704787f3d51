use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const EIG_FLOOR: f64 = 1e-8;

/// Gaussian fit of an embedding set.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStats {
    pub mean: Vec<f64>,
    /// `dim × dim`, row-major.
    pub cov: Vec<f64>,
    pub count: usize,
}

impl EmbeddingStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn cov_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim(), self.dim(), &self.cov)
    }
}

/// Sample mean and unbiased sample covariance.
pub fn embed_stats(rows: &[Vec<f64>]) -> Result<EmbeddingStats> {
    if rows.len() < 2 {
        return Err(Error::arg("embedding statistics need at least two vectors"));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::arg("embedding vectors must share one positive dimension"));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, &x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![0.0; d * d];
    for r in rows {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in i..d {
                cov[i * d + j] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / (n - 1.0);
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    Ok(EmbeddingStats { mean, cov, count: rows.len() })
}

fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let root = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| clamp_eig(l).sqrt()));
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

fn clamp_eig(l: f64) -> f64 {
    if l < EIG_FLOOR {
        0.0
    } else {
        l
    }
}

/// `|mu_p - mu_q|^2 + tr(S_p + S_q - 2 (S_p S_q)^(1/2))`. The trace of the
/// product root is taken from the eigenvalues of the symmetric matrix
/// `S_p^(1/2) S_q S_p^(1/2)`.
pub fn frechet_distance(p: &EmbeddingStats, q: &EmbeddingStats) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::arg(format!("dimension mismatch: {} vs {}", p.dim(), q.dim())));
    }
    let mean_term: f64 = p.mean.iter().zip(&q.mean).map(|(a, b)| (a - b) * (a - b)).sum();
    let sp = p.cov_matrix();
    let sq = q.cov_matrix();
    let root_p = psd_sqrt(&sp);
    let mut m = &root_p * &sq * &root_p;
    m = (&m + m.transpose()) * 0.5;
    let tr_root: f64 = SymmetricEigen::new(m).eigenvalues.iter().map(|&l| clamp_eig(l).sqrt()).sum();
    let d = mean_term + sp.trace() + sq.trace() - 2.0 * tr_root;
    Ok(d.max(0.0))
}
