use std::sync::OnceLock;

use dose_core::audio::save_wav;
use dose_core::dataset::{
    generate_pair, grid_to_sample, instance_spans, pair_seed, read_manifest, render_drum_loop, sample_fx_params,
    synth_library, write_manifest, PairRecord, SampleLibrary, SynthCounts, TrackRole, LOOP_SAMPLES,
};
use dose_core::{AudioBuffer, ByClass, DrumClass, SeedTree};

fn library() -> &'static SampleLibrary {
    static LIB: OnceLock<SampleLibrary> = OnceLock::new();
    LIB.get_or_init(|| synth_library(5, SynthCounts { oneshots_per_class: 4, loops_per_instrument: 2 }))
}

#[test]
fn pair_shape_and_determinism() {
    let a = generate_pair(SeedTree::new(11), library()).unwrap();
    let b = generate_pair(SeedTree::new(11), library()).unwrap();
    assert_eq!(a.mixture.num_channels(), 2);
    assert_eq!(a.mixture.len(), 176_400);
    assert!(a.oneshots.iter().all(|(_, s)| s.is_mono()));
    assert!(a.pattern().satisfies_hit_ranges());
    assert_eq!(a.mixture, b.mixture);
    assert_eq!(a.oneshots, b.oneshots);
    assert_eq!(a.meta, b.meta);
    let c = generate_pair(SeedTree::new(12), library()).unwrap();
    assert_ne!(a.mixture, c.mixture);
}

/// Re-rendering a one-shot alone at a class's onsets reproduces that class's
/// stem, and at most one instance of a class is active at any sample.
#[test]
fn stems_match_re_rendered_oneshots() {
    for seed in 0..6 {
        let pair = generate_pair(SeedTree::new(100 + seed), library()).unwrap();
        for class in DrumClass::ALL {
            let shot = pair.oneshots[class].channel(0);
            let onsets = pair.pattern().onsets(class);
            let stem = pair.drum_stems[class].channel(0);
            let spans = instance_spans(onsets, shot.len());
            for w in spans.windows(2) {
                assert!(w[0].end <= w[1].start, "{class}: overlapping instances");
            }
            let first = grid_to_sample(onsets[0]);
            let until = onsets.get(1).map_or(LOOP_SAMPLES, |&g| grid_to_sample(g));
            let n = shot.len().min(until - first);
            assert_eq!(&stem[first..first + n], &shot[..n], "{class} seed {seed}");
            assert!(stem[..first].iter().all(|&x| x == 0.0));
        }
        let again = render_drum_loop(pair.pattern(), &pair.oneshots).unwrap();
        assert_eq!(again, pair.drum_stems);
    }
}

#[test]
fn mastered_peak_respects_limiter() {
    for i in 0..8 {
        let pair = generate_pair(pair_seed(3, "train", i), library()).unwrap();
        let master = sample_fx_params(&mut SeedTree::new(pair.meta.fx_seeds["master"]).rng(), TrackRole::Master);
        let ceiling = 10f32.powf(master.limiter_threshold_db / 20.0);
        assert!(pair.mixture.peak() <= ceiling + 1e-4, "pair {i}: {} > {ceiling}", pair.mixture.peak());
        assert!(pair.mixture.channels().iter().flatten().all(|x| x.is_finite()));
    }
}

#[test]
fn manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<PairRecord> = (0..3)
        .map(|i| {
            let pair = generate_pair(pair_seed(1, "test", i), library()).unwrap();
            PairRecord {
                index: i,
                split: "test".to_owned(),
                seed: pair.meta.seed,
                mixture: format!("mixtures/test_{i:06}.wav"),
                oneshots: ByClass::from_fn(|c| format!("oneshots/{c}/test_{i:06}.wav")),
                pattern: pair.meta.pattern.clone(),
                instruments: pair.meta.included_instruments().into_iter().collect(),
                fx_seeds: pair.meta.fx_seeds.clone(),
                oneshot_sources: pair.meta.oneshots,
                instrument_sources: pair.meta.instruments.clone(),
            }
        })
        .collect();
    let path = dir.path().join("manifest.jsonl");
    write_manifest(&records, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    assert_eq!(read_manifest(&path).unwrap(), records);
}

#[test]
fn library_save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let lib = synth_library(9, SynthCounts { oneshots_per_class: 2, loops_per_instrument: 1 });
    lib.save(dir.path()).unwrap();
    let back = SampleLibrary::load(dir.path()).unwrap();
    back.check_complete().unwrap();
    for (class, entries) in back.oneshots.iter() {
        assert_eq!(entries.len(), 2);
        for (a, b) in entries.iter().zip(&lib.oneshots[class]) {
            assert_eq!(a.name, b.name);
            for (x, y) in a.audio.channel(0).iter().zip(b.audio.channel(0)) {
                assert!((x - y).abs() <= (0.5 + y.abs()) / 32768.0 + 1e-7);
            }
        }
    }
    // A stereo WAV dropped into the library is downmixed, not rejected.
    save_wav(&AudioBuffer::stereo(vec![0.5; 10], vec![0.0; 10]), dir.path().join("kick/zz.wav")).unwrap();
    let with_stereo = SampleLibrary::load(dir.path()).unwrap();
    assert!(with_stereo.oneshots.kick.iter().all(|e| e.audio.is_mono()));
}
