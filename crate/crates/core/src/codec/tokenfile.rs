//! Token file: `DTOK` magic, then little-endian u32 K, N, frame rate and
//! frame count, then `frames × K` row-major little-endian u16 tokens.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::TokenGrid;
use crate::error::{Error, Result};

pub const TOKEN_MAGIC: [u8; 4] = *b"DTOK";

pub fn write_tokens(q: &TokenGrid, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&TOKEN_MAGIC)?;
    for v in [q.codebooks(), q.codebook_size(), q.frame_rate() as usize, q.frames()] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    let mut body = Vec::with_capacity(q.as_slice().len() * 2);
    for t in q.as_slice() {
        body.extend_from_slice(&t.to_le_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

pub fn read_tokens(path: impl AsRef<Path>) -> Result<TokenGrid> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != TOKEN_MAGIC {
        return Err(Error::format("not a token file"));
    }
    let mut header = [0u32; 4];
    for h in header.iter_mut() {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        *h = u32::from_le_bytes(b);
    }
    let [k, n, rate, frames] = header.map(|v| v as usize);
    let mut body = vec![0u8; frames * k * 2];
    r.read_exact(&mut body)?;
    let data = body
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    TokenGrid::new(frames, k, n, rate as u32, data)
}
