use std::ops::Range;

use super::{grid_to_sample, ByClass, DrumClass, DrumPattern, LOOP_SAMPLES};
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Sample ranges occupied by each instance of a class's one-shot.
///
/// An instance ends at the earliest of: its natural end, the next onset of the
/// same class, or the loop end.
pub fn instance_spans(onsets: &[u16], oneshot_len: usize) -> Vec<Range<usize>> {
    let starts: Vec<usize> = onsets.iter().map(|&g| grid_to_sample(g)).collect();
    starts
        .iter()
        .enumerate()
        .map(|(i, &start)| {
            let next = starts.get(i + 1).copied().unwrap_or(LOOP_SAMPLES);
            let end = (start + oneshot_len).min(next).min(LOOP_SAMPLES);
            start..end.max(start)
        })
        .collect()
}

/// Renders one four-second mono stem per drum class.
pub fn render_drum_loop(
    pattern: &DrumPattern,
    oneshots: &ByClass<AudioBuffer>,
) -> Result<ByClass<AudioBuffer>> {
    ByClass::try_from_fn(|class: DrumClass| {
        let shot = oneshots[class]
            .as_mono()
            .map_err(|_| Error::arg(format!("{class} one-shot must be mono")))?;
        let mut stem = vec![0.0f32; LOOP_SAMPLES];
        for span in instance_spans(pattern.onsets(class), shot.len()) {
            let n = span.len();
            stem[span].copy_from_slice(&shot[..n]);
        }
        Ok(AudioBuffer::mono(stem))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::SAMPLE_RATE;

    fn pattern(kick: Vec<u16>, snare: Vec<u16>, hihat: Vec<u16>) -> DrumPattern {
        DrumPattern::new(ByClass { kick, snare, hihat }).unwrap()
    }

    fn shots(len: usize) -> ByClass<AudioBuffer> {
        ByClass::from_fn(|c| {
            let k = c as usize as f32 + 1.0;
            AudioBuffer::mono((0..len).map(|i| ((i as f32) * 0.01 * k).sin() + 1.5).collect())
        })
    }

    #[test]
    fn single_onset_at_zero_is_padded_oneshot() {
        let kit = shots(1000);
        let stems = render_drum_loop(&pattern(vec![0], vec![], vec![]), &kit).unwrap();
        let kick = stems.kick.channel(0);
        assert_eq!(kick.len(), LOOP_SAMPLES);
        assert_eq!(&kick[..1000], kit.kick.channel(0));
        assert!(kick[1000..].iter().all(|&s| s == 0.0));
        assert!(stems.snare.channel(0).iter().all(|&s| s == 0.0));
    }

    #[test]
    fn same_class_overlap_truncates_earlier_hit() {
        // 0.5 s hi-hat, onsets 0.2 s apart: grid 96 = 0.2 s exactly.
        let half_second = SAMPLE_RATE as usize / 2;
        let spans = instance_spans(&[0, 96], half_second);
        assert_eq!(spans[0], 0..8820);
        assert_eq!(spans[0].len() as f64 / SAMPLE_RATE as f64, 0.2);
        assert_eq!(spans[1], 8820..8820 + half_second);

        let kit = shots(half_second);
        let stems = render_drum_loop(&pattern(vec![], vec![], vec![0, 96]), &kit).unwrap();
        let hh = stems.hihat.channel(0);
        let shot = kit.hihat.channel(0);
        assert_eq!(&hh[..8820], &shot[..8820]);
        assert_eq!(&hh[8820..8820 + half_second], shot);
    }

    #[test]
    fn different_classes_do_not_truncate_each_other() {
        let kit = shots(2000);
        let stems = render_drum_loop(&pattern(vec![0], vec![0], vec![]), &kit).unwrap();
        assert_eq!(&stems.kick.channel(0)[..2000], kit.kick.channel(0));
        assert_eq!(&stems.snare.channel(0)[..2000], kit.snare.channel(0));
    }

    #[test]
    fn truncated_at_loop_end() {
        let spans = instance_spans(&[1919], 10_000);
        assert_eq!(spans[0].end, LOOP_SAMPLES);
    }

    #[test]
    fn rejects_stereo_oneshot() {
        let mut kit = shots(10);
        kit.snare = AudioBuffer::silence(2, 10);
        assert!(render_drum_loop(&pattern(vec![0], vec![0], vec![]), &kit).is_err());
    }
}
