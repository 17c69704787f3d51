use dose_core::tokens::{
    apply_delay, build_training_sequence, is_pad_position, onset_mask, pad_token, remove_delay, sep_token,
    MaskCoordinates,
};
use dose_core::TokenGrid;
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = TokenGrid> {
    (1usize..40, 1usize..9, 1usize..300).prop_flat_map(|(t, k, n)| {
        prop::collection::vec(1..=n as u16, t * k)
            .prop_map(move |data| TokenGrid::new(t, k, n, 50, data).unwrap())
    })
}

fn pair() -> impl Strategy<Value = (TokenGrid, TokenGrid)> {
    (1usize..20, 1usize..20, 1usize..7, 1usize..50).prop_flat_map(|(tm, tt, k, n)| {
        (
            prop::collection::vec(1..=n as u16, tm * k),
            prop::collection::vec(1..=n as u16, tt * k),
        )
            .prop_map(move |(a, b)| {
                (TokenGrid::new(tm, k, n, 50, a).unwrap(), TokenGrid::new(tt, k, n, 50, b).unwrap())
            })
    })
}

/// Brute-force count of onset entries that survive assembly.
fn enumerate_onsets(frames: usize, k: usize, coords: MaskCoordinates) -> usize {
    let mut n = 0;
    for s in 1..=frames + k - 1 {
        for cb in 1..=k {
            if s < cb || s > frames + cb - 1 {
                continue;
            }
            let t = match coords {
                MaskCoordinates::Delayed => s,
                MaskCoordinates::Frame => s + 1 - cb,
            };
            if t + cb <= k + 1 {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn assembled_onset_counts_for_four_codebooks() {
    let q = TokenGrid::new(100, 4, 8, 50, vec![3; 400]).unwrap();
    let mix = TokenGrid::new(10, 4, 8, 50, vec![2; 40]).unwrap();
    let delayed = build_training_sequence(&mix, &q, MaskCoordinates::Delayed).unwrap();
    let frame = build_training_sequence(&mix, &q, MaskCoordinates::Frame).unwrap();
    assert_eq!(delayed.layout.onset_mask.count(), enumerate_onsets(100, 4, MaskCoordinates::Delayed));
    assert_eq!(delayed.layout.onset_mask.count(), 6);
    assert_eq!(frame.layout.onset_mask.count(), enumerate_onsets(100, 4, MaskCoordinates::Frame));
    assert_eq!(frame.layout.onset_mask.count(), 10);
}

proptest! {
    #[test]
    fn delay_round_trip(q in grid()) {
        let d = apply_delay(&q);
        prop_assert_eq!(d.steps(), q.frames() + q.codebooks() - 1);
        prop_assert_eq!(remove_delay(&d, q.frames(), q.frame_rate()).unwrap(), q);
    }

    #[test]
    fn pad_positions_and_count(q in grid()) {
        let d = apply_delay(&q);
        let (t, k, pad) = (q.frames(), q.codebooks(), pad_token(q.codebook_size()));
        prop_assert_eq!(d.pad_count(), k * (k - 1));
        for s in 0..d.steps() {
            for cb in 0..k {
                // 1-based: PAD iff s < k or s > T + k - 1.
                let expect = s + 1 < cb + 1 || s + 1 > t + cb;
                prop_assert_eq!(d.get(s, cb) == pad, expect);
                prop_assert_eq!(is_pad_position(s, cb, t), expect);
            }
        }
    }

    #[test]
    fn onset_cardinality(t in 1usize..80, k in 1usize..9) {
        let m = onset_mask(t, k);
        // Row t holds K + 1 - t entries.
        let rows: usize = (1..=t.min(k)).map(|r| k + 1 - r).sum();
        prop_assert_eq!(m.count(), rows);
        if t >= k {
            prop_assert_eq!(m.count(), k * (k + 1) / 2);
        }
    }

    #[test]
    fn sequence_contracts((mix, tgt) in pair(), frame in any::<bool>()) {
        let coords = if frame { MaskCoordinates::Frame } else { MaskCoordinates::Delayed };
        let seq = build_training_sequence(&mix, &tgt, coords).unwrap();
        let (k, n) = (mix.codebooks(), mix.codebook_size());
        let l = &seq.layout;
        prop_assert_eq!(seq.steps(), (mix.frames() + k - 1) + 1 + (tgt.frames() + k - 1));
        prop_assert_eq!(l.loss_mask.count(), tgt.frames() * k);
        prop_assert!(l.onset_mask.is_subset_of(&l.loss_mask));
        prop_assert_eq!(l.onset_mask.count(), enumerate_onsets(tgt.frames(), k, coords));
        for (s, cb) in l.loss_mask.ones() {
            prop_assert!(s >= l.target_start);
            prop_assert!((1..=n as u16).contains(&seq.get(s, cb)));
        }
        for cb in 0..k {
            prop_assert_eq!(seq.get(l.sep_step, cb), sep_token(n));
        }
        // Vocabulary partition: data, PAD or SEP only.
        prop_assert!(seq.tokens.iter().all(|&v| v >= 1 && v as usize <= n + 2));
    }
}
