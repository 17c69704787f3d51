use super::AudioBuffer;
use crate::error::{Error, Result};

pub fn db_to_amplitude(db: f32) -> f32 {
    10f32.powf(db / 20.0)
}

pub fn gain_db(buf: &AudioBuffer, db: f32) -> Result<AudioBuffer> {
    if !db.is_finite() {
        return Err(Error::arg(format!("gain must be finite, got {db}")));
    }
    let g = db_to_amplitude(db);
    Ok(buf.map(|s| s * g))
}

/// Sample-wise sum; shorter inputs are zero-padded to the longest.
pub fn mix_sum(buffers: &[&AudioBuffer]) -> Result<AudioBuffer> {
    let first = buffers
        .first()
        .ok_or_else(|| Error::arg("mix_sum of an empty list"))?;
    let nch = first.num_channels();
    if buffers.iter().any(|b| b.num_channels() != nch) {
        return Err(Error::arg("mix_sum inputs differ in channel count"));
    }
    let len = buffers.iter().map(|b| b.len()).max().unwrap_or(0);
    let mut out = vec![vec![0.0f32; len]; nch];
    for b in buffers {
        for (acc, src) in out.iter_mut().zip(b.channels()) {
            for (a, s) in acc.iter_mut().zip(src) {
                *a += *s;
            }
        }
    }
    AudioBuffer::from_channels(out, first.sample_rate())
}

/// `len` samples from `start`, zero-padded past the end.
pub fn slice(buf: &AudioBuffer, start: usize, len: usize) -> AudioBuffer {
    let channels = buf
        .channels()
        .iter()
        .map(|c| {
            let mut out = vec![0.0f32; len];
            if start < c.len() {
                let n = (c.len() - start).min(len);
                out[..n].copy_from_slice(&c[start..start + n]);
            }
            out
        })
        .collect();
    AudioBuffer::from_channels(channels, buf.sample_rate()).expect("slice preserves layout")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(n: usize) -> AudioBuffer {
        AudioBuffer::mono((0..n).map(|i| i as f32).collect())
    }

    #[test]
    fn gain_examples() {
        let one = AudioBuffer::mono(vec![1.0]);
        assert_eq!(gain_db(&one, 0.0).unwrap(), one);
        let a = gain_db(&one, -1.94).unwrap().channel(0)[0];
        assert!((a - 0.7998).abs() < 1e-4, "{a}");
        let b = gain_db(&one, -13.98).unwrap().channel(0)[0];
        assert!((b - 0.2000).abs() < 1e-4, "{b}");
        assert!(gain_db(&one, f32::NAN).is_err());
    }

    #[test]
    fn mix_examples() {
        let b = AudioBuffer::mono(vec![0.1, -0.4, 0.25]);
        assert_eq!(mix_sum(&[&b]).unwrap(), b);
        let neg = b.map(|s| -s);
        assert!(mix_sum(&[&b, &neg]).unwrap().channel(0).iter().all(|&s| s == 0.0));

        let short = AudioBuffer::silence(1, 100);
        let long = AudioBuffer::silence(1, 150);
        assert_eq!(mix_sum(&[&short, &long]).unwrap().len(), 150);

        assert!(mix_sum(&[]).is_err());
        assert!(mix_sum(&[&short, &AudioBuffer::silence(2, 100)]).is_err());
    }

    #[test]
    fn slice_examples() {
        let b = ramp(4);
        assert_eq!(slice(&b, 0, 4), b);
        assert_eq!(slice(&b, 4, 10).channel(0), &[0.0; 10]);
        assert_eq!(slice(&b, 1, 2).channel(0), &[1.0, 2.0]);
        assert_eq!(slice(&b, 3, 3).channel(0), &[3.0, 0.0, 0.0]);
    }

    #[test]
    fn downmix_is_channel_average() {
        let b = AudioBuffer::stereo(vec![1.0, 0.0], vec![0.0, -0.5]);
        assert_eq!(b.to_mono().channel(0), &[0.5, -0.25]);
    }

    fn buf_strategy() -> impl Strategy<Value = Vec<f32>> {
        proptest::collection::vec(-1.0f32..1.0, 1..64)
    }

    proptest! {
        #[test]
        fn gain_composes(samples in buf_strategy(), a in -40.0f32..20.0, c in -40.0f32..20.0) {
            let b = AudioBuffer::mono(samples);
            let two = gain_db(&gain_db(&b, a).unwrap(), c).unwrap();
            let one = gain_db(&b, a + c).unwrap();
            for (x, y) in two.channel(0).iter().zip(one.channel(0)) {
                prop_assert!((x - y).abs() <= 1e-6 * y.abs(), "{x} vs {y}");
            }
        }

        #[test]
        fn mix_commutes_and_associates(x in buf_strategy(), y in buf_strategy(), z in buf_strategy()) {
            let (x, y, z) = (AudioBuffer::mono(x), AudioBuffer::mono(y), AudioBuffer::mono(z));
            let xy = mix_sum(&[&x, &y]).unwrap();
            let yx = mix_sum(&[&y, &x]).unwrap();
            prop_assert_eq!(&xy, &yx);
            let left = mix_sum(&[&xy, &z]).unwrap();
            let yz = mix_sum(&[&y, &z]).unwrap();
            let right = mix_sum(&[&x, &yz]).unwrap();
            for (p, q) in left.channel(0).iter().zip(right.channel(0)) {
                prop_assert!((p - q).abs() <= 1e-6);
            }
        }
    }
}
