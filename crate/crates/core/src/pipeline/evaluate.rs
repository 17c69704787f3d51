use std::path::Path;

use rayon::prelude::*;

use super::{fit_length, Extractor};
use crate::audio::{load_wav, AudioBuffer};
use crate::codec::Codec;
use crate::dataset::{ByClass, DrumClass, PairRecord};
use crate::error::{Error, Result};
use crate::eval::{builtin_embedding, embed_stats, frechet_distance, mss, EvalReport, RECONSTRUCTION};
use crate::model::Sampling;
use crate::rng::SeedTree;

/// One test pair: the mixture and the ground-truth one-shots.
#[derive(Debug, Clone)]
pub struct EvalItem {
    pub mixture: AudioBuffer,
    pub truth: ByClass<AudioBuffer>,
}

/// A named set of per-class extractors; classes without one are skipped.
pub struct System<'a> {
    pub name: String,
    pub extractors: ByClass<Option<&'a Extractor>>,
}

pub fn load_eval_items(dir: &Path, records: &[PairRecord]) -> Result<Vec<EvalItem>> {
    records
        .par_iter()
        .map(|r| {
            Ok(EvalItem {
                mixture: load_wav(dir.join(&r.mixture))?,
                truth: ByClass::try_from_fn(|c| load_wav(dir.join(&r.oneshots[c])))?,
            })
        })
        .collect()
}

/// Mean MSS over aligned pairs and the Fréchet distance between the
/// built-in embedding distributions of the two sets.
pub fn score_outputs(truth: &[AudioBuffer], outputs: &[AudioBuffer]) -> Result<(f64, f64)> {
    if truth.len() != outputs.len() || truth.len() < 2 {
        return Err(Error::arg("scoring needs at least two aligned pairs"));
    }
    let mss_values: Vec<f64> = truth
        .par_iter()
        .zip(outputs)
        .map(|(t, o)| mss(t, o))
        .collect::<Result<_>>()?;
    let embed = |set: &[AudioBuffer]| -> Result<Vec<Vec<f64>>> { set.par_iter().map(builtin_embedding).collect() };
    let fad = frechet_distance(&embed_stats(&embed(truth)?)?, &embed_stats(&embed(outputs)?)?)?;
    Ok((mss_values.iter().sum::<f64>() / mss_values.len() as f64, fad))
}

/// Scores every system and the codec reconstruction floor per class.
/// Ground truth is fitted to each class's target length.
pub fn evaluate(
    items: &[EvalItem],
    codec: &Codec,
    target_samples: usize,
    systems: &[System],
    sampling: Sampling,
    seed: u64,
) -> Result<EvalReport> {
    let mut report = EvalReport::default();
    for class in DrumClass::ALL {
        if systems.iter().all(|s| s.extractors[class].is_none()) {
            continue;
        }
        let truth: Vec<AudioBuffer> = items.iter().map(|it| fit_length(&it.truth[class], target_samples)).collect();
        let recon: Vec<AudioBuffer> = truth
            .par_iter()
            .map(|t| codec.decode(&codec.encode(t)?))
            .collect::<Result<_>>()?;
        let (m, f) = score_outputs(&truth, &recon)?;
        report.push(class, "mss", RECONSTRUCTION, m);
        report.push(class, "fad_builtin", RECONSTRUCTION, f);
        for system in systems {
            let Some(ex) = system.extractors[class] else { continue };
            if ex.target_samples() != target_samples {
                return Err(Error::arg("all extractors must produce the same length"));
            }
            let root = SeedTree::new(seed).child(&system.name).child(class.name());
            let outputs: Vec<AudioBuffer> = items
                .par_iter()
                .enumerate()
                .map(|(i, it)| ex.extract(&it.mixture, sampling, &mut root.index(i as u64).rng()))
                .collect::<Result<_>>()?;
            let (m, f) = score_outputs(&truth, &outputs)?;
            report.push(class, "mss", &system.name, m);
            report.push(class, "fad_builtin", &system.name, f);
        }
    }
    Ok(report)
}

/// Loads a test manifest's pairs and evaluates the given extractors, grouped
/// into systems by name.
pub fn evaluate_testset(
    dir: &Path,
    records: &[PairRecord],
    systems: &[System],
    sampling: Sampling,
    seed: u64,
) -> Result<EvalReport> {
    let first = systems
        .iter()
        .flat_map(|s| s.extractors.iter().filter_map(|(_, e)| *e))
        .next()
        .ok_or_else(|| Error::arg("no extractors to evaluate"))?;
    let codec_cfg = *first.codec.config();
    for s in systems {
        for (_, e) in s.extractors.iter() {
            if let Some(e) = e {
                if *e.codec.config() != codec_cfg {
                    return Err(Error::arg("extractors were trained with different codecs"));
                }
            }
        }
    }
    let items = load_eval_items(dir, records)?;
    evaluate(&items, &first.codec, first.target_samples(), systems, sampling, seed)
}
