use std::collections::HashSet;

use log::info;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate, EvalReport};
use super::stats::{mean, population_std};
use super::train::{train_model, TrainHyper};
use crate::error::{Error, Result};
use crate::preprocess::{augment, split, stratified_holdout, subsample_per_class, AugmentConfig, SplitSpec};
use crate::rng;
use crate::types::{CharacterLabel, Dataset};

/// Everything a protocol run needs besides data, split and seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub augment: AugmentConfig,
    pub train: TrainHyper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: usize,
    pub mean_accuracy: f64,
    /// Population standard deviation over repeats.
    pub std_accuracy: f64,
    pub n_repeats: usize,
    pub accuracies: Vec<f64>,
}

impl SweepPoint {
    pub fn from_accuracies(x: usize, accuracies: Vec<f64>) -> Self {
        SweepPoint {
            x,
            mean_accuracy: mean(&accuracies),
            std_accuracy: population_std(&accuracies),
            n_repeats: accuracies.len(),
            accuracies,
        }
    }
}

/// Seed of one sweep job, from the sweep seed, its x value and repeat index.
pub fn sweep_job_seed(seed: u64, x: usize, repeat: usize) -> u64 {
    rng::derive_seed(rng::derive_seed(seed, x as u64), repeat as u64)
}

/// Applies only the timescale-changing part of augmentation (in-place window
/// averaging), so validation and test items match what the model trains on.
pub fn evaluation_view(ds: &Dataset, aug: &AugmentConfig) -> Result<Dataset> {
    if !aug.in_place {
        return Ok(ds.clone());
    }
    let cfg = AugmentConfig { noise_copies: 0, ..aug.clone() };
    augment(ds, &cfg)
}

/// Fails if any training item, or the original it was derived from, is a test item.
pub fn audit_lineage(train: &Dataset, test: &Dataset) -> Result<()> {
    let test_ids: HashSet<&str> = test.items.iter().flat_map(|it| [it.id.as_str(), it.lineage_root()]).collect();
    if let Some(leak) =
        train.items.iter().find(|it| test_ids.contains(it.id.as_str()) || test_ids.contains(it.lineage_root()))
    {
        return Err(Error::InvalidSplit(format!("training item {} leaks from the test side", leak.id)));
    }
    Ok(())
}

/// Validation carve → augmentation of the remaining training side → training
/// → evaluation on `test`.
pub fn train_and_evaluate(train: &Dataset, test: &Dataset, settings: &RunSettings, seed: u64) -> Result<EvalReport> {
    let (val, rest) = stratified_holdout(train, settings.train.val_fraction, rng::derive_seed_str(seed, "val"));
    let (val, rest) =
        if val.is_empty() || rest.is_empty() { (train.with_items(Vec::new()), train.clone()) } else { (val, rest) };
    let aug = AugmentConfig { rng_seed: rng::derive_seed_str(seed, "augment"), ..settings.augment.clone() };
    let fitted_on = augment(&rest, &aug)?;
    let val = evaluation_view(&val, &aug)?;
    let test = evaluation_view(test, &aug)?;
    audit_lineage(&fitted_on, &test)?;
    audit_lineage(&val, &test)?;
    let outcome = train_model(&fitted_on, &val, &settings.train, seed)?;
    let mut report = evaluate(&outcome.model, &test)?;
    report.train_history = outcome.history;
    Ok(report)
}

/// Split → augment (training side only) → train → evaluate.
pub fn run_protocol(ds: &Dataset, spec: &SplitSpec, settings: &RunSettings, seed: u64) -> Result<EvalReport> {
    let (train, test) = split(ds, spec)?;
    audit_lineage(&train, &test)?;
    info!("{} split: {} train / {} test items", spec.protocol, train.len(), test.len());
    let mut report = train_and_evaluate(&train, &test, settings, seed)?;
    report.protocol = Some(spec.clone());
    Ok(report)
}

/// Keeps only items of `classes`, which become the class list (in that order).
pub fn restrict_classes(ds: &Dataset, classes: &[CharacterLabel]) -> Result<Dataset> {
    let keep: HashSet<&CharacterLabel> = classes.iter().collect();
    let items = ds.items.iter().filter(|it| keep.contains(&it.label)).cloned().collect();
    let mut out = Dataset::new(items, classes.to_vec())?;
    out.metadata = ds.metadata.clone();
    Ok(out)
}

fn originals_per_class(ds: &Dataset) -> Vec<usize> {
    let mut counts = vec![0; ds.num_classes()];
    for it in ds.items.iter().filter(|it| it.parent_id.is_none()) {
        if let Some(k) = ds.class_index(&it.label) {
            counts[k] += 1;
        }
    }
    counts
}

/// Pooled protocol on `per_class` originals of each class.
pub fn run_pooled_budget(
    ds: &Dataset,
    per_class: usize,
    test_fraction: f64,
    settings: &RunSettings,
    seed: u64,
) -> Result<EvalReport> {
    let sub = subsample_per_class(ds, per_class, rng::derive_seed_str(seed, "budget"));
    let spec = SplitSpec::pooled(test_fraction, rng::derive_seed_str(seed, "split"));
    run_protocol(&sub, &spec, settings, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub repeats: usize,
    pub test_fraction: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings { repeats: 5, test_fraction: 0.2 }
    }
}

/// Accuracy against number of classes at a fixed per-class budget.
/// Each repeat draws a fresh seeded class subset.
pub fn sweep_classes(
    ds: &Dataset,
    samples_per_class: usize,
    class_counts: &[usize],
    sweep: &SweepSettings,
    settings: &RunSettings,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if sweep.repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let counts = originals_per_class(ds);
    let eligible: Vec<usize> = (0..ds.num_classes()).filter(|&k| counts[k] >= samples_per_class).collect();
    let need = class_counts.iter().copied().max().unwrap_or(0);
    if eligible.len() < need || class_counts.iter().any(|&k| k < 2) {
        return Err(Error::InsufficientData(format!(
            "{} classes have {samples_per_class} samples; sweep needs {need} (and every count >= 2)",
            eligible.len()
        )));
    }
    class_counts
        .iter()
        .map(|&k| {
            let accs = (0..sweep.repeats)
                .map(|r| {
                    let job = sweep_job_seed(seed, k, r);
                    let mut pick = eligible.clone();
                    rng::shuffle(&mut pick, &mut rng::stream(rng::derive_seed_str(job, "classes")));
                    pick.truncate(k);
                    pick.sort_unstable();
                    let classes: Vec<CharacterLabel> = pick.iter().map(|&c| ds.class_list[c]).collect();
                    let sub = restrict_classes(ds, &classes)?;
                    let acc = run_pooled_budget(&sub, samples_per_class, sweep.test_fraction, settings, job)?.accuracy;
                    info!("sweep classes k={k} repeat {r}: {acc:.4}");
                    Ok(acc)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(SweepPoint::from_accuracies(k, accs))
        })
        .collect()
}

/// Accuracy against per-class training-set size. Within one repeat every size
/// shares the test set, and smaller training sets are subsets of larger ones.
pub fn sweep_train_size(
    ds: &Dataset,
    sizes: &[usize],
    sweep: &SweepSettings,
    settings: &RunSettings,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if sweep.repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let mut per_size: Vec<Vec<f64>> = vec![Vec::new(); sizes.len()];
    for r in 0..sweep.repeats {
        let rep_seed = sweep_job_seed(seed, 0, r);
        let spec = SplitSpec::pooled(sweep.test_fraction, rng::derive_seed_str(rep_seed, "split"));
        let (train, test) = split(ds, &spec)?;
        let available = originals_per_class(&train).into_iter().min().unwrap_or(0);
        if let Some(&s) = sizes.iter().find(|&&s| s == 0 || s > available) {
            return Err(Error::InsufficientData(format!(
                "size {s} requested; smallest class has {available} training items"
            )));
        }
        for (slot, &s) in per_size.iter_mut().zip(sizes) {
            let sub = subsample_per_class(&train, s, rng::derive_seed_str(rep_seed, "subsample"));
            let mut report = train_and_evaluate(&sub, &test, settings, sweep_job_seed(seed, s, r))?;
            report.protocol = Some(spec.clone());
            info!("sweep size {s} repeat {r}: {:.4}", report.accuracy);
            slot.push(report.accuracy);
        }
    }
    Ok(sizes.iter().zip(per_size).map(|(&s, accs)| SweepPoint::from_accuracies(s, accs)).collect())
}
