use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{generate_pair, write_manifest, ByClass, MixturePair, PairRecord, SampleLibrary};
use crate::audio::save_wav;
use crate::error::Result;
use crate::rng::SeedTree;

/// Seed of pair `index` in `split` under a run seed.
pub fn pair_seed(run_seed: u64, split: &str, index: usize) -> SeedTree {
    SeedTree::new(run_seed).child("dataset").child(split).index(index as u64)
}

#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub records: Vec<PairRecord>,
}

const CHUNK: usize = 32;

/// Generates `count` pairs and writes `mixtures/`, `oneshots/{class}/` and
/// `manifest.jsonl` under `out`. Pairs are generated in parallel in bounded
/// chunks and written in index order.
pub fn generate_split(
    library: &SampleLibrary,
    out: &Path,
    count: usize,
    run_seed: u64,
    split: &str,
    mut progress: impl FnMut(usize),
) -> Result<DatasetSummary> {
    library.check_complete()?;
    fs::create_dir_all(out.join("mixtures"))?;
    for class in super::DrumClass::ALL {
        fs::create_dir_all(out.join("oneshots").join(class.name()))?;
    }

    let mut records = Vec::with_capacity(count);
    for start in (0..count).step_by(CHUNK) {
        let end = (start + CHUNK).min(count);
        let pairs: Vec<MixturePair> = (start..end)
            .into_par_iter()
            .map(|i| generate_pair(pair_seed(run_seed, split, i), library))
            .collect::<Result<_>>()?;
        for (i, pair) in (start..end).zip(pairs) {
            records.push(write_pair(out, split, i, &pair)?);
        }
        progress(end);
    }
    write_manifest(&records, out.join("manifest.jsonl"))?;
    Ok(DatasetSummary { records })
}

fn write_pair(out: &Path, split: &str, index: usize, pair: &MixturePair) -> Result<PairRecord> {
    let stem = format!("{split}_{index:06}.wav");
    let mixture = format!("mixtures/{stem}");
    save_wav(&pair.mixture, out.join(&mixture))?;
    let oneshots = ByClass::try_from_fn(|class| {
        let rel = format!("oneshots/{}/{stem}", class.name());
        save_wav(&pair.oneshots[class], out.join(&rel))?;
        Ok::<_, crate::Error>(rel)
    })?;
    Ok(PairRecord {
        index,
        split: split.to_owned(),
        seed: pair.meta.seed,
        mixture,
        oneshots,
        pattern: pair.meta.pattern.clone(),
        instruments: pair.meta.included_instruments().into_iter().collect(),
        fx_seeds: pair.meta.fx_seeds.clone(),
        oneshot_sources: pair.meta.oneshots,
        instrument_sources: pair.meta.instruments.clone(),
    })
}

/// Regenerates the pair a manifest record points at.
pub fn regenerate_record(record: &PairRecord, library: &SampleLibrary) -> Result<MixturePair> {
    generate_pair(SeedTree::new(record.seed), library)
}
