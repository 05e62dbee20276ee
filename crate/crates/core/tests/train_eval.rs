use std::collections::HashSet;

use proptest::prelude::*;

use strokesense::nn::{init_params, ModelParams, ModelShape};
use strokesense::preprocess::{split, AugmentConfig, SplitSpec};
use strokesense::rng;
use strokesense::synth::{default_glyphs, generate_dataset, WriterStyle};
use strokesense::train_eval::{
    evaluate, read_sweep_csv, report_from_predictions, run_pooled_budget, run_protocol, sweep_classes, sweep_job_seed,
    sweep_train_size, train_and_evaluate, train_model, write_confusion_csv, write_sweep_csv, RunSettings, SweepPoint,
    SweepSettings, TrainHyper, TrainedModel,
};
use strokesense::types::{Alphabet, CharacterLabel, Dataset};

fn corpus(classes: usize, writers: usize, per_class: usize, seed: u64) -> Dataset {
    let glyphs = default_glyphs(Alphabet::Latin, classes);
    generate_dataset(Alphabet::Latin, &glyphs, &WriterStyle::population(writers, seed), per_class, seed).unwrap()
}

fn quick_settings(epochs: usize) -> RunSettings {
    RunSettings {
        augment: AugmentConfig {
            windows: vec![5],
            strides: vec![5],
            noise_copies: 0,
            in_place: true,
            ..AugmentConfig::default()
        },
        train: TrainHyper { learning_rate: 0.01, batch_size: 16, max_epochs: epochs, ..TrainHyper::default() },
    }
}

#[test]
fn overfits_two_classes() {
    let ds = corpus(2, 1, 10, 4);
    assert_eq!(ds.len(), 20);
    let hyper =
        TrainHyper { learning_rate: 0.01, batch_size: 4, max_epochs: 500, patience: 500, ..TrainHyper::default() };
    let out = train_model(&ds, &ds, &hyper, 1).unwrap();
    assert!(out.history.len() <= 500);
    assert!(out.history.iter().all(|h| h.loss.is_finite()));
    let acc = evaluate(&out.model, &ds).unwrap().accuracy;
    assert!(acc >= 0.99, "train accuracy {acc}");
}

#[test]
fn training_is_bitwise_deterministic() {
    let ds = corpus(3, 2, 4, 2);
    let hyper = TrainHyper { max_epochs: 5, batch_size: 8, ..TrainHyper::default() };
    let a = train_model(&ds, &ds, &hyper, 77).unwrap();
    let b = train_model(&ds, &ds, &hyper, 77).unwrap();
    assert_eq!(a.model.params, b.model.params);
    assert_eq!(a.history, b.history);
    let c = train_model(&ds, &ds, &hyper, 78).unwrap();
    assert_ne!(a.model.params, c.model.params);
}

fn constant_model(classes: &[CharacterLabel], favourite: Option<usize>) -> TrainedModel {
    let mut params = ModelParams::zeros(&ModelShape::paper(classes.len()));
    if let Some(k) = favourite {
        params.output.b[k] = 10.0;
    }
    TrainedModel { params, class_list: classes.to_vec() }
}

#[test]
fn constant_predictors() {
    let ds = corpus(4, 2, 3, 6);
    let r = evaluate(&constant_model(&ds.class_list, Some(0)), &ds).unwrap();
    assert_eq!(r.accuracy, 0.25);
    assert_eq!(r.confusion.iter().map(|row| row[0]).sum::<u64>(), ds.len() as u64);
    let r = evaluate(&constant_model(&ds.class_list, Some(2)), &ds).unwrap();
    assert_eq!(r.per_class_accuracy, vec![0.0, 0.0, 1.0, 0.0]);
    // Uniform outputs: ties go to class 0.
    let r = evaluate(&constant_model(&ds.class_list, None), &ds).unwrap();
    assert_eq!(r.accuracy, 0.25);
    let mut other = ds.class_list.clone();
    other.swap(0, 1);
    assert!(evaluate(&constant_model(&other, None), &ds).is_err());
}

#[test]
fn sweep_and_confusion_csv_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let pts = vec![
        SweepPoint::from_accuracies(2, vec![0.9, 0.8]),
        SweepPoint::from_accuracies(4, vec![0.123_456_789]),
        SweepPoint::from_accuracies(8, vec![0.5, 0.25, 1.0 / 3.0]),
    ];
    let path = dir.path().join("sweep.csv");
    write_sweep_csv(&pts, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().next(), Some("x,mean_accuracy,std_accuracy,n_repeats"));
    let back = read_sweep_csv(&path).unwrap();
    for (a, b) in pts.iter().zip(&back) {
        assert_eq!((a.x, a.n_repeats), (b.x, b.n_repeats));
        assert!((a.mean_accuracy - b.mean_accuracy).abs() <= 5e-7);
        assert!((a.std_accuracy - b.std_accuracy).abs() <= 5e-7);
        assert!(b.std_accuracy >= 0.0);
    }

    let classes: Vec<CharacterLabel> =
        "ab".chars().enumerate().map(|(k, g)| CharacterLabel::new(Alphabet::Latin, k, g)).collect();
    let r = report_from_predictions(&classes, &[0, 0, 1], &[0, 1, 1]);
    let path = dir.path().join("confusion.csv");
    write_confusion_csv(&r, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let grid: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(grid.len(), 3);
    assert!(grid.iter().all(|row| row.len() == 3));
    assert_eq!(grid[1], ["a", "1", "1"]);
    assert_eq!(grid[2], ["b", "0", "1"]);
}

#[test]
fn degenerate_sweeps_equal_plain_runs() {
    let ds = corpus(3, 2, 10, 8);
    let settings = quick_settings(3);
    let sweep = SweepSettings { repeats: 1, test_fraction: 0.25 };
    let seed = 5;

    let pts = sweep_classes(&ds, 12, &[3], &sweep, &settings, seed).unwrap();
    let plain = run_pooled_budget(&ds, 12, 0.25, &settings, sweep_job_seed(seed, 3, 0)).unwrap();
    assert_eq!(pts[0].mean_accuracy, plain.accuracy);
    assert_eq!((pts[0].std_accuracy, pts[0].n_repeats), (0.0, 1));

    let rep_seed = sweep_job_seed(seed, 0, 0);
    let spec = SplitSpec::pooled(0.25, rng::derive_seed_str(rep_seed, "split"));
    let (train, _) = split(&ds, &spec).unwrap();
    let full = ds.class_list.iter().map(|c| train.items.iter().filter(|it| it.label == *c).count()).min().unwrap();
    assert_eq!(train.len(), full * ds.num_classes(), "stratified split should be balanced");
    let pts = sweep_train_size(&ds, &[full], &sweep, &settings, seed).unwrap();
    let plain = run_protocol(&ds, &spec, &settings, sweep_job_seed(seed, full, 0)).unwrap();
    assert_eq!(pts[0].mean_accuracy, plain.accuracy);
}

#[test]
fn protocols_respect_writer_groups_and_repeat_exactly() {
    let ds = corpus(2, 6, 4, 3);
    let settings = quick_settings(2);
    let writers = ds.writers();
    let disjoint = SplitSpec::writer_disjoint(&writers[..4], &writers[4..], 1);
    let (train, test) = split(&ds, &disjoint).unwrap();
    let train_w: HashSet<&str> = train.items.iter().map(|it| it.writer_id.as_str()).collect();
    assert!(test.items.iter().all(|it| !train_w.contains(it.writer_id.as_str())));

    let a = run_protocol(&ds, &disjoint, &settings, 9).unwrap();
    let b = run_protocol(&ds, &disjoint, &settings, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_test, test.len());
    assert_eq!(a.accuracy, a.trace() as f64 / a.n_test as f64);

    let sweep = SweepSettings { repeats: 2, test_fraction: 0.25 };
    let s1 = sweep_train_size(&ds, &[1, 2], &sweep, &settings, 4).unwrap();
    let s2 = sweep_train_size(&ds, &[1, 2], &sweep, &settings, 4).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn training_side_never_sees_test_lineage() {
    let ds = corpus(2, 2, 6, 12);
    let settings =
        RunSettings { augment: AugmentConfig { noise_copies: 1, ..AugmentConfig::default() }, ..quick_settings(1) };
    let (train, test) = split(&ds, &SplitSpec::pooled(0.5, 3)).unwrap();
    assert!(train_and_evaluate(&train, &test, &settings, 1).is_ok());
    // Handing the test set in as training data must trip the lineage audit.
    assert!(train_and_evaluate(&test, &test, &settings, 1).is_err());
}

#[test]
fn init_is_seeded() {
    let shape = ModelShape::paper(3);
    assert_eq!(init_params(&shape, 1), init_params(&shape, 1));
    assert_ne!(init_params(&shape, 1), init_params(&shape, 2));
}

proptest! {
    #[test]
    fn reports_satisfy_confusion_identities(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..200),
    ) {
        let classes: Vec<CharacterLabel> = "abcd"
            .chars()
            .enumerate()
            .map(|(k, g)| CharacterLabel::new(Alphabet::Latin, k, g))
            .collect();
        let (truth, pred): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let r = report_from_predictions(&classes, &truth, &pred);
        prop_assert_eq!(r.n_test, truth.len());
        prop_assert_eq!(r.accuracy, r.trace() as f64 / r.n_test as f64);
        for (k, row) in r.confusion.iter().enumerate() {
            let count = truth.iter().filter(|&&t| t == k).count() as u64;
            prop_assert_eq!(row.iter().sum::<u64>(), count);
            if count > 0 {
                prop_assert_eq!(r.per_class_accuracy[k], row[k] as f64 / count as f64);
            }
        }
    }

    #[test]
    fn sweep_points_have_nonnegative_spread(accs in prop::collection::vec(0.0f64..=1.0, 1..10)) {
        let p = SweepPoint::from_accuracies(3, accs.clone());
        prop_assert!(p.std_accuracy >= 0.0);
        prop_assert_eq!(p.n_repeats, accs.len());
        prop_assert!(p.mean_accuracy >= 0.0 && p.mean_accuracy <= 1.0 + 1e-12);
    }
}
