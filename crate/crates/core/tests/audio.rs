use std::io::Cursor;

use dose_core::audio::{read_wav, write_wav};
use dose_core::AudioBuffer;
use proptest::prelude::*;

fn written(buf: &AudioBuffer) -> Vec<u8> {
    let mut out = Vec::new();
    write_wav(buf, Cursor::new(&mut out)).unwrap();
    out
}

/// Export checked against an independent reader: header fields and the
/// clamp-then-round quantization.
#[test]
fn export_parses_under_hound() {
    let left = vec![0.0, 0.5, -0.5, 1.0, -1.0, 1.5, -2.0, 0.25];
    let right = vec![0.1, -0.1, 0.2, -0.2, 0.3, -0.3, 0.4, -0.4];
    let buf = AudioBuffer::stereo(left.clone(), right.clone());
    let bytes = written(&buf);
    let mut r = hound::WavReader::new(Cursor::new(bytes)).unwrap();
    let spec = r.spec();
    assert_eq!(spec.channels, 2);
    assert_eq!(spec.sample_rate, 44100);
    assert_eq!(spec.bits_per_sample, 16);
    assert_eq!(spec.sample_format, hound::SampleFormat::Int);
    let samples: Vec<i16> = r.samples::<i16>().map(|s| s.unwrap()).collect();
    let expect = |x: f32| (x.clamp(-1.0, 1.0) * 32767.0).round() as i16;
    for i in 0..left.len() {
        assert_eq!(samples[2 * i], expect(left[i]));
        assert_eq!(samples[2 * i + 1], expect(right[i]));
    }
}

#[test]
fn reads_hound_written_files() {
    let mut bytes = Vec::new();
    let spec = hound::WavSpec { channels: 1, sample_rate: 44100, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
    {
        let mut w = hound::WavWriter::new(Cursor::new(&mut bytes), spec).unwrap();
        for s in [0i16, 32767, -32768, 16384] {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
    }
    let buf = read_wav(Cursor::new(bytes)).unwrap();
    assert_eq!(buf.channel(0), &[0.0, 32767.0 / 32768.0, -1.0, 0.5]);
}

proptest! {
    #[test]
    fn round_trip_within_quantization(samples in prop::collection::vec(-1.0f32..=1.0, 1..400)) {
        let buf = AudioBuffer::mono(samples.clone());
        let back = read_wav(Cursor::new(written(&buf))).unwrap();
        prop_assert_eq!(back.len(), samples.len());
        // Export scales by 32767 and import divides by 32768, so the error is
        // rounding plus a |x|/32768 scale term; below |x| = 0.5 it is within
        // one step.
        for (a, b) in samples.iter().zip(back.channel(0)) {
            let bound = (0.5 + a.abs()) / 32768.0 + 1e-7;
            prop_assert!((a - b).abs() <= bound, "{} vs {}", a, b);
            if a.abs() <= 0.5 {
                prop_assert!((a - b).abs() <= 1.0 / 32768.0 + 1e-7);
            }
        }
    }
}
