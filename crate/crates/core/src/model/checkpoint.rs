//! Checkpoint file: `DOSECKPT` magic, u32 version, u32 header length, JSON
//! header, u64 parameter count, f32 parameters, then an optional optimizer
//! block (u8 flag, u64 step count, f32 first and second moments). All
//! integers and floats little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::optim::{Adam, AdamConfig};
use super::transformer::Transformer;
use crate::codec::CodecConfig;
use crate::dataset::DrumClass;
use crate::error::{Error, Result};
use crate::tokens::MaskCoordinates;

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"DOSECKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything besides the weights needed to use a checkpoint for extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub codec: CodecConfig,
    pub class: Option<DrumClass>,
    /// Mixture frames the model is conditioned on.
    pub cond_frames: usize,
    /// Frames generated per extraction.
    pub target_frames: usize,
    pub onset_weight: f64,
    pub mask_coordinates: MaskCoordinates,
    pub steps_trained: u64,
    pub adam: Option<AdamConfig>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub model: Transformer<f32>,
    pub optimizer: Option<Adam>,
}

fn write_f32s(w: &mut impl Write, xs: &[f32]) -> Result<()> {
    let mut buf = Vec::with_capacity(xs.len() * 4);
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_f32s(r: &mut impl Read, n: usize) -> Result<Vec<f32>> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

impl Checkpoint {
    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        let mut meta = self.meta.clone();
        meta.model = *self.model.config();
        meta.adam = self.optimizer.as_ref().map(|o| o.config);
        let header = serde_json::to_vec(&meta)?;
        w.write_all(&CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        let params = self.model.params();
        w.write_all(&(params.len() as u64).to_le_bytes())?;
        write_f32s(w, params)?;
        match &self.optimizer {
            Some(opt) => {
                w.write_all(&[1])?;
                w.write_all(&opt.t.to_le_bytes())?;
                write_f32s(w, &opt.m)?;
                write_f32s(w, &opt.v)?;
            }
            None => w.write_all(&[0])?,
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        if read_array::<8>(r)? != CHECKPOINT_MAGIC {
            return Err(Error::format("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(read_array(r)?);
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(format!("unsupported checkpoint version {version}")));
        }
        let header_len = u32::from_le_bytes(read_array(r)?) as usize;
        let mut header = vec![0u8; header_len];
        r.read_exact(&mut header)?;
        let meta: CheckpointMeta = serde_json::from_slice(&header)?;
        let n = u64::from_le_bytes(read_array(r)?) as usize;
        let expected = super::params::param_count(&meta.model);
        if n != expected {
            return Err(Error::corrupt(format!("checkpoint holds {n} parameters, config needs {expected}")));
        }
        let params = read_f32s(r, n)?;
        if params.iter().any(|x| !x.is_finite()) {
            return Err(Error::corrupt("non-finite parameter in checkpoint"));
        }
        let model = Transformer::from_params(meta.model, params)?;
        let optimizer = match read_array::<1>(r)?[0] {
            0 => None,
            1 => {
                let t = u64::from_le_bytes(read_array(r)?);
                let m = read_f32s(r, n)?;
                let v = read_f32s(r, n)?;
                let config = meta.adam.unwrap_or_default();
                Some(Adam { config, m, v, t })
            }
            f => return Err(Error::corrupt(format!("bad optimizer flag {f}"))),
        };
        Ok(Checkpoint { meta, model, optimizer })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(&mut BufReader::new(File::open(path)?))
    }
}
