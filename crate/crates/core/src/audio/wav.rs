//! Canonical RIFF/WAVE reader and writer.
//!
//! Writing always produces a 44-byte header followed by 16-bit little-endian
//! PCM. Reading accepts 16-bit integer or 32-bit float PCM (plain or
//! `WAVE_FORMAT_EXTENSIBLE`) at 44.1 kHz, skipping unknown chunks.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AudioBuffer, SAMPLE_RATE};
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xfffe;

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let file = File::open(path)?;
    read_wav(BufReader::new(file))
}

pub fn save_wav(buf: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_wav(buf, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Quantize one sample the way the writer does: clamp, scale by 32767, round.
pub(crate) fn quantize(s: f32) -> i16 {
    (s.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

pub fn write_wav<W: Write>(buf: &AudioBuffer, mut w: W) -> Result<()> {
    let nch = buf.num_channels() as u16;
    let block_align = nch * 2;
    let data_len = buf.len() as u64 * block_align as u64;
    if data_len > u32::MAX as u64 - 36 {
        return Err(Error::arg("buffer too long for a RIFF file"));
    }
    let data_len = data_len as u32;

    let mut header = Vec::with_capacity(44);
    header.extend_from_slice(b"RIFF");
    header.extend_from_slice(&(36 + data_len).to_le_bytes());
    header.extend_from_slice(b"WAVE");
    header.extend_from_slice(b"fmt ");
    header.extend_from_slice(&16u32.to_le_bytes());
    header.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    header.extend_from_slice(&nch.to_le_bytes());
    header.extend_from_slice(&SAMPLE_RATE.to_le_bytes());
    header.extend_from_slice(&(SAMPLE_RATE * block_align as u32).to_le_bytes());
    header.extend_from_slice(&block_align.to_le_bytes());
    header.extend_from_slice(&16u16.to_le_bytes());
    header.extend_from_slice(b"data");
    header.extend_from_slice(&data_len.to_le_bytes());
    w.write_all(&header)?;

    let mut data = Vec::with_capacity(data_len as usize);
    for i in 0..buf.len() {
        for ch in buf.channels() {
            data.extend_from_slice(&quantize(ch[i]).to_le_bytes());
        }
    }
    w.write_all(&data)?;
    Ok(())
}

struct Fmt {
    tag: u16,
    channels: u16,
    rate: u32,
    bits: u16,
}

pub fn read_wav<R: Read>(mut r: R) -> Result<AudioBuffer> {
    let mut riff = [0u8; 12];
    r.read_exact(&mut riff)?;
    if &riff[0..4] != b"RIFF" || &riff[8..12] != b"WAVE" {
        return Err(Error::format("not a RIFF/WAVE file"));
    }

    let mut fmt: Option<Fmt> = None;
    loop {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)?;
        let id = [head[0], head[1], head[2], head[3]];
        let size = u32::from_le_bytes([head[4], head[5], head[6], head[7]]) as usize;
        match &id {
            b"fmt " => {
                let body = read_chunk(&mut r, size)?;
                fmt = Some(parse_fmt(&body)?);
            }
            b"data" => {
                let fmt = fmt.ok_or_else(|| Error::format("data chunk before fmt chunk"))?;
                let body = read_chunk(&mut r, size)?;
                return decode_samples(&fmt, &body);
            }
            _ => {
                read_chunk(&mut r, size)?;
            }
        }
    }
}

fn read_chunk<R: Read>(r: &mut R, size: usize) -> io::Result<Vec<u8>> {
    let mut body = vec![0u8; size];
    r.read_exact(&mut body)?;
    if size % 2 == 1 {
        let mut pad = [0u8; 1];
        // A missing pad byte at end of file is tolerated.
        let _ = r.read(&mut pad)?;
    }
    Ok(body)
}

fn parse_fmt(b: &[u8]) -> Result<Fmt> {
    if b.len() < 16 {
        return Err(Error::format("fmt chunk too short"));
    }
    let u16_at = |i: usize| u16::from_le_bytes([b[i], b[i + 1]]);
    let mut tag = u16_at(0);
    if tag == FORMAT_EXTENSIBLE {
        if b.len() < 26 {
            return Err(Error::format("extensible fmt chunk too short"));
        }
        tag = u16_at(24);
    }
    let f = Fmt {
        tag,
        channels: u16_at(2),
        rate: u32::from_le_bytes([b[4], b[5], b[6], b[7]]),
        bits: u16_at(14),
    };
    match (f.tag, f.bits) {
        (FORMAT_PCM, 16) | (FORMAT_FLOAT, 32) => {}
        (tag, bits) => {
            return Err(Error::format(format!(
                "unsupported encoding: format tag {tag}, {bits} bits"
            )))
        }
    }
    if f.rate != SAMPLE_RATE {
        return Err(Error::format(format!(
            "unsupported sample rate {} Hz (need {SAMPLE_RATE})",
            f.rate
        )));
    }
    if !(1..=2).contains(&f.channels) {
        return Err(Error::format(format!("unsupported channel count {}", f.channels)));
    }
    Ok(f)
}

fn decode_samples(fmt: &Fmt, body: &[u8]) -> Result<AudioBuffer> {
    let nch = fmt.channels as usize;
    let width = fmt.bits as usize / 8;
    let frames = body.len() / (width * nch);
    let mut channels = vec![Vec::with_capacity(frames); nch];
    for frame in body.chunks_exact(width * nch) {
        for (c, s) in frame.chunks_exact(width).enumerate() {
            let v = if fmt.tag == FORMAT_PCM {
                i16::from_le_bytes([s[0], s[1]]) as f32 / 32768.0
            } else {
                let v = f32::from_le_bytes([s[0], s[1], s[2], s[3]]);
                if !v.is_finite() {
                    return Err(Error::format("non-finite float sample"));
                }
                v
            };
            channels[c].push(v);
        }
    }
    AudioBuffer::from_channels(channels, SAMPLE_RATE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(buf: &AudioBuffer) -> AudioBuffer {
        let mut bytes = Vec::new();
        write_wav(buf, &mut bytes).unwrap();
        read_wav(&bytes[..]).unwrap()
    }

    #[test]
    fn max_positive_sample_scales_by_32768() {
        let b = roundtrip(&AudioBuffer::mono(vec![1.0]));
        assert_eq!(b.channel(0)[0], 32767.0 / 32768.0);
    }

    #[test]
    fn min_sample_maps_to_minus_one() {
        let mut bytes = Vec::new();
        write_wav(&AudioBuffer::mono(vec![0.0]), &mut bytes).unwrap();
        let n = bytes.len();
        bytes[n - 2..].copy_from_slice(&(-32768i16).to_le_bytes());
        assert_eq!(read_wav(&bytes[..]).unwrap().channel(0)[0], -1.0);
    }

    #[test]
    fn clamps_on_export() {
        assert_eq!(quantize(1.5), 32767);
        assert_eq!(quantize(-7.0), -32767);
        assert_eq!(quantize(0.5), 16384);
    }

    #[test]
    fn stereo_data_chunk_length() {
        let mut bytes = Vec::new();
        write_wav(&AudioBuffer::silence(2, 44_100), &mut bytes).unwrap();
        assert_eq!(bytes.len(), 44 + 176_400);
        assert_eq!(&bytes[40..44], &176_400u32.to_le_bytes());
    }

    #[test]
    fn rejects_other_rates() {
        let mut bytes = Vec::new();
        write_wav(&AudioBuffer::mono(vec![0.0; 4]), &mut bytes).unwrap();
        bytes[24..28].copy_from_slice(&48_000u32.to_le_bytes());
        assert!(matches!(read_wav(&bytes[..]), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_file_is_io_error() {
        let mut bytes = Vec::new();
        write_wav(&AudioBuffer::mono(vec![0.25; 100]), &mut bytes).unwrap();
        bytes.truncate(100);
        assert!(matches!(read_wav(&bytes[..]), Err(Error::Io(_))));
        assert!(matches!(read_wav(&bytes[..20]), Err(Error::Io(_))));
    }

    #[test]
    fn reads_float_and_skips_unknown_chunks() {
        let samples = [0.5f32, -0.25, 0.125];
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(b"abc\0");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&FORMAT_FLOAT.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&44_100u32.to_le_bytes());
        bytes.extend_from_slice(&(44_100u32 * 4).to_le_bytes());
        bytes.extend_from_slice(&4u16.to_le_bytes());
        bytes.extend_from_slice(&32u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&12u32.to_le_bytes());
        for s in samples {
            bytes.extend_from_slice(&s.to_le_bytes());
        }
        let b = read_wav(&bytes[..]).unwrap();
        assert_eq!(b.channel(0), &samples);
    }

    #[test]
    fn rejects_24_bit() {
        let mut bytes = Vec::new();
        write_wav(&AudioBuffer::mono(vec![0.0; 4]), &mut bytes).unwrap();
        bytes[34..36].copy_from_slice(&24u16.to_le_bytes());
        assert!(matches!(read_wav(&bytes[..]), Err(Error::Format(_))));
    }
}
