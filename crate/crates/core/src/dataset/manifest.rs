use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pair::{InstrumentChoice, OneShotChoice};
use super::{ByClass, DrumPattern, Instrument};
use crate::error::{Error, Result};

/// One JSON-lines manifest record. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub index: usize,
    pub split: String,
    pub seed: u64,
    pub mixture: String,
    pub oneshots: ByClass<String>,
    pub pattern: DrumPattern,
    pub instruments: Vec<Instrument>,
    pub fx_seeds: BTreeMap<String, u64>,
    pub oneshot_sources: ByClass<OneShotChoice>,
    pub instrument_sources: BTreeMap<Instrument, InstrumentChoice>,
}

pub fn write_manifest(records: &[PairRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<PairRecord>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("manifest line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}
