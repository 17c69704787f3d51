//! Binary embedding files, little-endian.
//!
//! Stats file: u32 dim, u32 count, f32 mean (dim), f32 covariance
//! (dim × dim, row-major). Rows file: u32 dim, u32 rows, then `rows` f32
//! vectors of length dim (one per clip).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::frechet::EmbeddingStats;
use crate::error::{Error, Result};

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect())
}

fn write_f32s(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = xs.iter().flat_map(|&x| (x as f32).to_le_bytes()).collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_stats(stats: &EmbeddingStats, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(stats.dim() as u32).to_le_bytes())?;
    w.write_all(&(stats.count as u32).to_le_bytes())?;
    write_f32s(&mut w, &stats.mean)?;
    write_f32s(&mut w, &stats.cov)?;
    w.flush()?;
    Ok(())
}

pub fn read_stats(path: impl AsRef<Path>) -> Result<EmbeddingStats> {
    let mut r = BufReader::new(File::open(path)?);
    let dim = read_u32(&mut r)? as usize;
    let count = read_u32(&mut r)? as usize;
    if dim == 0 || count < 2 {
        return Err(Error::corrupt(format!("stats file with dim {dim}, count {count}")));
    }
    let mean = read_f32s(&mut r, dim)?;
    let cov = read_f32s(&mut r, dim * dim)?;
    Ok(EmbeddingStats { mean, cov, count })
}

pub fn write_embeddings(rows: &[Vec<f64>], path: impl AsRef<Path>) -> Result<()> {
    let dim = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::arg("embedding rows differ in length"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&(rows.len() as u32).to_le_bytes())?;
    for r in rows {
        write_f32s(&mut w, r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let mut r = BufReader::new(File::open(path)?);
    let dim = read_u32(&mut r)? as usize;
    let rows = read_u32(&mut r)? as usize;
    (0..rows).map(|_| read_f32s(&mut r, dim)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::embed_stats;

    #[test]
    fn stats_and_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![vec![1.0, 2.0], vec![0.5, -1.0], vec![0.25, 4.0]];
        write_embeddings(&rows, dir.path().join("r.emb")).unwrap();
        assert_eq!(read_embeddings(dir.path().join("r.emb")).unwrap(), rows);
        let stats = embed_stats(&rows).unwrap();
        write_stats(&stats, dir.path().join("s.stats")).unwrap();
        let back = read_stats(dir.path().join("s.stats")).unwrap();
        assert_eq!(back.count, 3);
        for (a, b) in back.cov.iter().zip(&stats.cov) {
            assert!((a - b).abs() < 1e-6);
        }
        let bytes = std::fs::read(dir.path().join("s.stats")).unwrap();
        assert_eq!(bytes.len(), 8 + 4 * (2 + 4));
    }
}
