use proptest::prelude::*;

use strokesense::types::{Alphabet, CharacterLabel, Dataset, LabeledSequence, Origin, SensorSample, SensorSequence};

fn arb_sequence() -> impl Strategy<Value = SensorSequence> {
    (1usize..60, prop::collection::vec(1u64..13, 60)).prop_flat_map(|(t, steps)| {
        prop::collection::vec(prop::array::uniform6(-2000.0f64..2000.0), t).prop_map(move |rows| {
            let mut now = 0;
            let samples = rows
                .into_iter()
                .enumerate()
                .map(|(j, ch)| {
                    now += if j == 0 { 0 } else { steps[j] };
                    SensorSample::new(now, ch)
                })
                .collect();
            SensorSequence::new(samples)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matrix_round_trip_is_exact(s in arb_sequence()) {
        let m = s.to_matrix().unwrap();
        prop_assert_eq!(m.cols(), s.len());
        for (j, sample) in s.samples.iter().enumerate() {
            prop_assert_eq!(m.column(j), sample.channels());
        }
        let back = SensorSequence::from_matrix(&m, &s.timestamps()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn nominal_sequences_validate_strictly(rows in prop::collection::vec(prop::array::uniform6(-16.0f64..16.0), 1..40)) {
        let s = SensorSequence::new(
            rows.into_iter().enumerate().map(|(j, ch)| SensorSample::new(10 * j as u64, ch)).collect(),
        );
        prop_assert!(s.validate(true).is_empty());
    }

    #[test]
    fn one_broken_rule_one_violation(t in 2usize..30, at in 0usize..30, kind in 0u8..3) {
        let at = at % t;
        let mut samples: Vec<SensorSample> = (0..t).map(|j| SensorSample::new(10 * j as u64, [0.0; 6])).collect();
        match kind {
            0 => samples[at].gy = f64::NAN,
            1 => samples[at].az = 17.0,
            _ => {
                for s in &mut samples[at.max(1)..] {
                    s.t_ms -= 10;
                }
            }
        }
        let v = SensorSequence::new(samples).validate(true);
        prop_assert_eq!(v.len(), 1, "{:?}", v);
    }

    #[test]
    fn datasets_reject_labels_outside_class_list(extra in 2usize..26) {
        let a = CharacterLabel::new(Alphabet::Latin, 0, 'a');
        let b = CharacterLabel::new(Alphabet::Latin, 1, 'b');
        let stray = CharacterLabel::new(Alphabet::Latin, extra, (b'a' + extra as u8) as char);
        let item = |label| LabeledSequence {
            id: format!("{label}"),
            sequence: SensorSequence::new(vec![SensorSample::new(0, [0.0; 6])]),
            label,
            writer_id: "w".into(),
            origin: Origin::Recorded,
            parent_id: None,
        };
        prop_assert!(Dataset::new(vec![item(a), item(b)], vec![a, b]).is_ok());
        prop_assert!(Dataset::new(vec![item(a), item(stray)], vec![a, b]).is_err());
        prop_assert!(Dataset::new(vec![item(a)], vec![a, a]).is_err());
        prop_assert!(Dataset::new(vec![item(a)], vec![a]).is_err());
    }
}
