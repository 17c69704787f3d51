use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use dose_bench::sample_pair;
use dose_core::{Codec, CodecConfig};

fn codec(c: &mut Criterion) {
    let mix = sample_pair(1).mixture.to_mono();
    let mut g = c.benchmark_group("codec");
    for rate in [25, 100] {
        let codec = Codec::new(CodecConfig { frame_rate: rate, ..Default::default() }).unwrap();
        let q = codec.encode(&mix).unwrap();
        g.bench_function(format!("encode_4s_fc{rate}"), |b| b.iter(|| codec.encode(black_box(&mix)).unwrap()));
        g.bench_function(format!("decode_4s_fc{rate}"), |b| b.iter(|| codec.decode(black_box(&q)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, codec);
criterion_main!(benches);
