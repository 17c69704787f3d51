use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde_json::json;

use dose_core::audio::{load_wav, save_wav};
use dose_core::codec::{read_tokens, write_tokens};
use dose_core::dataset::{generate_split, read_manifest, synth_library as make_library, SampleLibrary, SynthCounts};
use dose_core::eval::{builtin_embedding, embed_stats, frechet_distance, read_embeddings, read_stats, write_embeddings, write_stats, EmbeddingStats};
use dose_core::model::{Checkpoint, CheckpointMeta, Sampling, Transformer};
use dose_core::pipeline::{
    class_sequences, evaluate_testset, fit_model_config, frames_for_seconds, mixture_frames, tokenize_records,
    Extractor, System,
};
use dose_core::{ByClass, Codec, CodecConfig, SeedTree};

use crate::config::RunConfig;
use crate::progress::emit;
use crate::{
    usage, CodecFlags, DecodeArgs, EmbedArgs, EncodeArgs, EvalArgs, ExtractArgs, FadArgs, GenDatasetArgs,
    InitConfigArgs, SamplingFlags, SynthLibraryArgs, TrainArgs,
};

const SPLITS: [&str; 3] = ["train", "val", "test"];

fn apply_codec_flags(cfg: &mut CodecConfig, f: &CodecFlags) -> anyhow::Result<()> {
    if let Some(v) = f.frame_rate {
        cfg.frame_rate = v;
    }
    if let Some(v) = f.codebooks {
        cfg.codebooks = v;
    }
    if let Some(v) = f.codebook_size {
        cfg.codebook_size = v;
    }
    cfg.validate().map_err(|e| usage(format!("codec: {e}")))
}

fn sampling(cfg: &RunConfig, f: &SamplingFlags) -> Sampling {
    match (f.greedy, f.temperature) {
        (true, _) => Sampling::Greedy,
        (false, Some(temperature)) => Sampling::Temperature { temperature, top_k: f.top_k.unwrap_or(0) },
        (false, None) => cfg.sampling,
    }
}

pub fn synth_library(cfg: &RunConfig, a: SynthLibraryArgs) -> anyhow::Result<()> {
    let counts = SynthCounts { oneshots_per_class: a.oneshots_per_class, loops_per_instrument: a.loops_per_instrument };
    if counts.oneshots_per_class == 0 || counts.loops_per_instrument == 0 {
        return Err(usage("library counts must be positive"));
    }
    make_library(cfg.seed, counts).save(&a.out)?;
    emit("synth-library", json!({ "out": a.out, "seed": cfg.seed }));
    Ok(())
}

pub fn gen_dataset(mut cfg: RunConfig, a: GenDatasetArgs) -> anyhow::Result<()> {
    let d = &mut cfg.dataset;
    d.library = a.library.or(d.library.take());
    d.out = a.out.or(d.out.take());
    d.count = a.count.unwrap_or(d.count);
    if let Some(s) = a.split {
        d.split = s;
    }
    let library = d.library.clone().ok_or_else(|| usage("--library is required"))?;
    let out = d.out.clone().ok_or_else(|| usage("--out is required"))?;
    if !SPLITS.contains(&d.split.as_str()) {
        return Err(usage(format!("--split must be one of {SPLITS:?}")));
    }
    let library = SampleLibrary::load(&library)?;
    let total = d.count;
    let summary = generate_split(&library, &out, total, cfg.seed, &d.split, |done| {
        emit("gen-dataset", json!({ "done": done, "total": total }));
    })?;
    fs::write(out.join("run_config.toml"), cfg.to_toml())?;
    emit("gen-dataset-done", json!({ "pairs": summary.records.len(), "out": out }));
    Ok(())
}

pub fn encode(mut cfg: RunConfig, a: EncodeArgs) -> anyhow::Result<()> {
    apply_codec_flags(&mut cfg.codec, &a.codec)?;
    let codec = Codec::new(cfg.codec)?;
    let audio = load_wav(&a.input)?;
    let q = codec.encode(&audio.to_mono())?;
    write_tokens(&q, &a.out)?;
    emit("encode", json!({ "frames": q.frames(), "codebooks": q.codebooks(), "out": a.out }));
    Ok(())
}

pub fn decode(mut cfg: RunConfig, a: DecodeArgs) -> anyhow::Result<()> {
    apply_codec_flags(&mut cfg.codec, &a.codec)?;
    let q = read_tokens(&a.input)?;
    // Shape comes from the file; the codebook construction (latent size,
    // seed) from the configuration.
    let codec_cfg = CodecConfig {
        codebooks: q.codebooks(),
        codebook_size: q.codebook_size(),
        frame_rate: q.frame_rate(),
        ..cfg.codec
    };
    let audio = Codec::new(codec_cfg)?.decode(&q)?;
    save_wav(&audio, &a.out)?;
    emit("decode", json!({ "samples": audio.len(), "out": a.out }));
    Ok(())
}

pub fn train(mut cfg: RunConfig, a: TrainArgs) -> anyhow::Result<()> {
    apply_codec_flags(&mut cfg.codec, &a.codec)?;
    let t = &mut cfg.train;
    t.steps = a.steps.unwrap_or(t.steps);
    t.batch_size = a.batch_size.unwrap_or(t.batch_size);
    t.lr = a.lr.unwrap_or(t.lr);
    t.onset_weight = a.onset_weight.unwrap_or(t.onset_weight);
    t.target_seconds = a.target_seconds.unwrap_or(t.target_seconds);
    t.mask_coordinates = a.mask_coordinates.unwrap_or(t.mask_coordinates);
    t.seed = cfg.seed;
    let m = &mut cfg.model;
    m.d_model = a.d_model.unwrap_or(m.d_model);
    m.n_layers = a.layers.unwrap_or(m.n_layers);
    m.n_heads = a.heads.unwrap_or(m.n_heads);
    m.seed = cfg.seed;
    let positive = |x: f64| x.is_finite() && x > 0.0;
    let weight_ok = t.onset_weight.is_finite() && t.onset_weight >= 0.0;
    if t.steps == 0 || t.batch_size == 0 || !positive(t.lr) || !weight_ok || !positive(t.target_seconds) {
        return Err(usage("steps, batch size, learning rate and target length must be positive"));
    }

    let codec = Codec::new(cfg.codec)?;
    let records = read_manifest(a.data.join("manifest.jsonl"))?;
    let target_frames = frames_for_seconds(codec.config(), cfg.train.target_seconds);
    let cond_frames = mixture_frames(codec.config());
    let model_cfg = fit_model_config(cfg.model, codec.config(), cond_frames, target_frames);
    model_cfg.validate().map_err(|e| usage(format!("model: {e}")))?;

    emit("tokenize", json!({ "pairs": records.len() }));
    let pairs = tokenize_records(&a.data, &records, &codec, target_frames)?;
    let seqs = class_sequences(&pairs, a.class, cfg.train.mask_coordinates)?;
    drop(pairs);

    let model = Transformer::<f32>::new(model_cfg)?;
    emit("train-start", json!({ "class": a.class, "params": model.param_count(), "sequences": seqs.len() }));
    let log_every = a.log_every.max(1);
    let tc = cfg.train;
    let out = dose_core::pipeline::train(model, &seqs, &tc, |step, r, lr| {
        if (step + 1) % log_every == 0 || step + 1 == tc.steps {
            emit(
                "train",
                json!({
                    "step": step + 1,
                    "loss": r.total,
                    "full_length": r.full_length,
                    "onset": r.onset,
                    "lr": lr,
                }),
            );
        }
    })?;
    let meta = CheckpointMeta {
        model: model_cfg,
        codec: cfg.codec,
        class: Some(a.class),
        cond_frames,
        target_frames,
        onset_weight: tc.onset_weight,
        mask_coordinates: tc.mask_coordinates,
        steps_trained: tc.steps as u64,
        adam: Some(tc.adam),
    };
    Checkpoint { meta, model: out.model, optimizer: Some(out.optimizer) }.save(&a.ckpt)?;
    emit("train-done", json!({ "ckpt": a.ckpt }));
    Ok(())
}

fn load_extractors(paths: &[PathBuf]) -> anyhow::Result<Vec<Extractor>> {
    paths
        .iter()
        .map(|p| {
            let ckpt = Checkpoint::load(p).with_context(|| format!("checkpoint {}", p.display()))?;
            Ok(Extractor::new(ckpt)?)
        })
        .collect()
}

pub fn extract(cfg: RunConfig, a: ExtractArgs) -> anyhow::Result<()> {
    let sampling = sampling(&cfg, &a.sampling);
    let extractors = load_extractors(&a.ckpt)?;
    let mut seen = BTreeSet::new();
    let names: Vec<String> = extractors
        .iter()
        .enumerate()
        .map(|(i, e)| e.class().map_or_else(|| format!("model{i}"), |c| c.name().to_owned()))
        .collect();
    if !names.iter().all(|n| seen.insert(n.clone())) {
        return Err(usage("two checkpoints extract the same class"));
    }
    let mixture = load_wav(&a.input)?;
    let outputs: Vec<_> = extractors
        .par_iter()
        .zip(&names)
        .map(|(e, name)| {
            let mut rng = SeedTree::new(cfg.seed).child("extract").child(name).rng();
            e.extract(&mixture, sampling, &mut rng)
        })
        .collect::<Result<_, _>>()?;
    if outputs.len() == 1 {
        save_wav(&outputs[0], &a.out)?;
        emit("extract", json!({ "class": names[0], "out": a.out, "samples": outputs[0].len() }));
    } else {
        fs::create_dir_all(&a.out)?;
        for (audio, name) in outputs.iter().zip(&names) {
            let path = a.out.join(format!("{name}.wav"));
            save_wav(audio, &path)?;
            emit("extract", json!({ "class": name, "out": path, "samples": audio.len() }));
        }
    }
    Ok(())
}

fn by_class<'a>(name: &str, extractors: &'a [Extractor]) -> anyhow::Result<ByClass<Option<&'a Extractor>>> {
    let mut slots: ByClass<Option<&'a Extractor>> = ByClass::default();
    for e in extractors {
        let class = e.class().ok_or_else(|| usage(format!("system {name}: checkpoint has no drum class")))?;
        if slots[class].replace(e).is_some() {
            return Err(usage(format!("system {name}: two {class} checkpoints")));
        }
    }
    Ok(slots)
}

pub fn eval(cfg: RunConfig, a: EvalArgs) -> anyhow::Result<()> {
    let sampling = sampling(&cfg, &a.sampling);
    let mut named = Vec::new();
    if !a.ckpts.is_empty() {
        named.push(("dose".to_owned(), a.ckpts.clone()));
    }
    named.extend(a.systems.iter().cloned());
    if named.is_empty() {
        return Err(usage("give --ckpts or at least one --system"));
    }
    let loaded: Vec<(String, Vec<Extractor>)> = named
        .into_iter()
        .map(|(n, paths)| Ok((n, load_extractors(&paths)?)))
        .collect::<anyhow::Result<_>>()?;
    let systems: Vec<System> = loaded
        .iter()
        .map(|(n, ex)| Ok(System { name: n.clone(), extractors: by_class(n, ex)? }))
        .collect::<anyhow::Result<_>>()?;

    let dir = a.manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut records = read_manifest(&a.manifest)?;
    if let Some(n) = a.limit {
        records.truncate(n);
    }
    emit("eval-start", json!({ "pairs": records.len(), "systems": systems.len() }));
    let report = evaluate_testset(&dir, &records, &systems, sampling, cfg.seed)?;
    fs::write(&a.out, report.to_json())?;
    for r in &report.records {
        emit("eval", json!({ "class": r.class, "metric": r.metric, "system": r.system, "value": r.value }));
    }
    Ok(())
}

pub fn embed(a: EmbedArgs) -> anyhow::Result<()> {
    let rows: Vec<Vec<f64>> = a
        .inputs
        .par_iter()
        .map(|p| {
            let audio = load_wav(p).with_context(|| format!("{}", p.display()))?;
            Ok(builtin_embedding(&audio.to_mono())?)
        })
        .collect::<anyhow::Result<_>>()?;
    write_embeddings(&rows, &a.out)?;
    if let Some(path) = &a.stats_out {
        write_stats(&embed_stats(&rows)?, path)?;
    }
    emit("embed", json!({ "files": rows.len(), "out": a.out }));
    Ok(())
}

fn load_distribution(path: &Path) -> anyhow::Result<EmbeddingStats> {
    if path.extension().is_some_and(|e| e == "stats") {
        Ok(read_stats(path)?)
    } else {
        Ok(embed_stats(&read_embeddings(path)?)?)
    }
}

pub fn fad(a: FadArgs) -> anyhow::Result<()> {
    let d = frechet_distance(&load_distribution(&a.reference)?, &load_distribution(&a.generated)?)?;
    println!("{d}");
    emit("fad", json!({ "value": d }));
    Ok(())
}

pub fn init_config(cfg: &RunConfig, a: InitConfigArgs) -> anyhow::Result<()> {
    let text = cfg.to_toml();
    match a.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
