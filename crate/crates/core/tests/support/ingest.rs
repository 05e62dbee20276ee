use strokesense::ingest::{
    encode_frame, parse_frame, parse_framed, read_dataset, segment_sessions, write_dataset, CalibrationScale, Frame,
    FrameScanner, FRAMED_LEN,
};
use strokesense::rng::{self, SplitMix64};
use strokesense::types::{Alphabet, CharacterLabel, Dataset, LabeledSequence, Origin, SensorSample, SensorSequence};
use strokesense::Error;

pub fn random_frame(r: &mut SplitMix64) -> Frame {
    let word = |r: &mut SplitMix64| rng::uniform(r, -32768.0, 32768.0).floor() as i16;
    Frame {
        button: rng::unit_f64(r) < 0.5,
        t_ms: (rng::unit_f64(r) * u32::MAX as f64) as u32,
        raw: std::array::from_fn(|_| word(r)),
    }
}

/// Returns the number of frames that failed to round-trip.
pub fn round_trip_failures(n: usize) -> usize {
    let mut r = rng::stream(1);
    let mut failures = 0;
    for _ in 0..n {
        let f = random_frame(&mut r);
        let bytes = encode_frame(&f);
        if parse_frame(&bytes[1..]).ok() != Some(f) || parse_framed(&bytes).ok() != Some(f) {
            failures += 1;
        }
    }
    failures
}

/// Every byte position and every wrong value, on `frames` random frames.
/// Returns the number of corrupted frames tried.
pub fn single_byte_corruptions(frames: usize) -> usize {
    let mut r = rng::stream(2);
    let mut tried = 0;
    for _ in 0..frames {
        let f = random_frame(&mut r);
        let good = encode_frame(&f);
        for pos in 0..FRAMED_LEN {
            for v in (0..=255u8).filter(|&v| v != good[pos]) {
                let mut bad = good;
                bad[pos] = v;
                let err = parse_framed(&bad).unwrap_err();
                if pos == 0 {
                    assert!(matches!(err, Error::Desync), "{err}");
                } else {
                    assert!(matches!(err, Error::CorruptFrame), "pos {pos}: {err}");
                }
                tried += 1;
            }
        }
    }
    tried
}

/// Stream [a, corrupted b, c]: the corrupted unit never decodes at its own
/// offset and `a` is always recovered. Returns (trials, resynchronized onto c).
pub fn stream_resync(frames: usize) -> (u64, u64) {
    let mut r = rng::stream(3);
    let mut trials = 0u64;
    let mut recovered = 0u64;
    for _ in 0..frames {
        let frames = [random_frame(&mut r), random_frame(&mut r), random_frame(&mut r)];
        let mut stream: Vec<u8> = frames.iter().flat_map(encode_frame).collect();
        for pos in FRAMED_LEN..2 * FRAMED_LEN {
            let orig = stream[pos];
            for v in (0..=255u8).filter(|&v| v != orig) {
                stream[pos] = v;
                let got = FrameScanner::new().push(&stream);
                trials += 1;
                assert_eq!(got[0].offset, 0);
                assert_eq!(got[0].frame, frames[0]);
                assert!(got.iter().all(|s| s.offset != FRAMED_LEN as u64), "corrupted unit accepted");
                let last = got.last().unwrap();
                if last.offset == 2 * FRAMED_LEN as u64 && last.frame == frames[2] {
                    recovered += 1;
                }
            }
            stream[pos] = orig;
        }
    }
    (trials, recovered)
}

/// Independent rising-edge scan.
pub fn oracle_runs(buttons: &[bool], min_len: usize) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &b) in buttons.iter().chain(std::iter::once(&false)).enumerate() {
        let prev = i > 0 && buttons[i - 1];
        if b && !prev {
            start = Some(i);
        }
        if !b && prev {
            let s = start.take().unwrap();
            if i - s >= min_len {
                runs.push((s, i));
            }
        }
    }
    runs
}

/// All button strings up to `max_len`, min_len 1..=4. Returns strings checked.
pub fn segmentation_exhaustive(max_len: usize) -> usize {
    let cal = CalibrationScale::default();
    let mut strings = 0;
    for len in 0..=max_len {
        for bits in 0u32..(1 << len) {
            strings += 1;
            let buttons: Vec<bool> = (0..len).map(|i| bits >> i & 1 == 1).collect();
            let frames: Vec<Frame> = buttons
                .iter()
                .enumerate()
                .map(|(i, &b)| Frame {
                    button: b,
                    t_ms: 1000 + 10 * i as u32,
                    raw: [i as i16, -(i as i16), 16384, 131 * i as i16, 0, 7],
                })
                .collect();
            for min_len in 1..=4 {
                let got = segment_sessions(&frames, &cal, min_len);
                let want = oracle_runs(&buttons, min_len);
                assert_eq!(got.len(), want.len(), "{buttons:?} min {min_len}");
                for (seq, &(s, e)) in got.iter().zip(&want) {
                    assert_eq!(seq.len(), e - s);
                    for (k, sample) in seq.samples.iter().enumerate() {
                        let i = s + k;
                        assert_eq!(sample.t_ms, 10 * k as u64);
                        assert_eq!(sample.ax, i as f64 / 16384.0);
                        assert_eq!(sample.az, 1.0);
                        assert_eq!(sample.gx, (131 * i) as f64 / 131.0);
                    }
                }
            }
        }
    }
    strings
}

pub fn random_dataset(n: usize, seed: u64) -> Dataset {
    let mut r = rng::stream(seed);
    let classes: Vec<CharacterLabel> =
        "abc".chars().enumerate().map(|(k, g)| CharacterLabel::new(Alphabet::Latin, k, g)).collect();
    let mut items = Vec::new();
    for k in 0..n {
        let len = 2 + (rng::unit_f64(&mut r) * 40.0) as usize;
        let samples = (0..len)
            .map(|t| {
                // Magnitudes spread over many decades to stress text formatting.
                let ch = std::array::from_fn(|c| {
                    let mag = 10f64.powf(rng::uniform(&mut r, -6.0, 3.0));
                    let limit = if c < 3 { 16.0 } else { 2000.0 };
                    (rng::uniform(&mut r, -1.0, 1.0) * mag).clamp(-limit, limit)
                });
                SensorSample::new(10 * t as u64, ch)
            })
            .collect();
        let augmented = k % 5 == 4;
        let id = if augmented { format!("w{}_{:03}~noise0", k % 3, k - 1) } else { format!("w{}_{k:03}", k % 3) };
        items.push(LabeledSequence {
            parent_id: augmented.then(|| format!("w{}_{:03}", k % 3, k - 1)),
            id,
            sequence: SensorSequence::new(samples),
            label: classes[k % 3],
            writer_id: format!("w{}", k % 3),
            origin: if augmented { Origin::Augmented } else { Origin::Synthetic },
        });
    }
    let mut ds = Dataset::new(items, classes).unwrap();
    ds.metadata.insert("seed".into(), seed.to_string());
    ds
}

/// Writes and re-reads random datasets; returns the worst relative channel error.
pub fn dataset_round_trip() -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let ds = random_dataset(50, seed);
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_dataset(&ds, dir.path()).unwrap();
        let back = read_dataset(&manifest).unwrap();
        assert_eq!(back.class_list, ds.class_list);
        assert_eq!(back.metadata, ds.metadata);
        assert_eq!(back.len(), ds.len());
        for (a, b) in ds.items.iter().zip(&back.items) {
            assert_eq!((&a.id, &a.writer_id, a.label, a.origin), (&b.id, &b.writer_id, b.label, b.origin));
            assert_eq!(a.parent_id, b.parent_id);
            assert_eq!(a.sequence.timestamps(), b.sequence.timestamps());
            for (x, y) in a.sequence.samples.iter().zip(&b.sequence.samples) {
                for (u, v) in x.channels().iter().zip(y.channels()) {
                    worst = worst.max((u - v).abs() / u.abs().max(f64::MIN_POSITIVE));
                }
            }
        }
    }
    worst
}
