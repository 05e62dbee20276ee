use serde::{Deserialize, Serialize};

use super::train::{EpochRecord, TrainedModel};
use crate::error::{Error, Result};
use crate::nn::{argmax, model_forward, TrainSample};
use crate::preprocess::SplitSpec;
use crate::types::{CharacterLabel, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Option<SplitSpec>,
    pub class_list: Vec<CharacterLabel>,
    pub accuracy: f64,
    /// Recall per class; 0 for classes absent from the test set.
    pub per_class_accuracy: Vec<f64>,
    /// `confusion[true][predicted]`, in class-list order.
    pub confusion: Vec<Vec<u64>>,
    pub n_test: usize,
    pub train_history: Vec<EpochRecord>,
}

impl EvalReport {
    pub fn trace(&self) -> u64 {
        (0..self.confusion.len()).map(|k| self.confusion[k][k]).sum()
    }
}

/// Argmax predictions (ties to the lowest index) for every item of `ds`.
pub fn predict(model: &TrainedModel, ds: &Dataset) -> Result<Vec<usize>> {
    ds.items
        .iter()
        .map(|it| {
            let s = TrainSample::from_item(it, 0)?;
            Ok(argmax(model_forward(&model.params, &s.x, s.steps)?.probs()))
        })
        .collect()
}

pub fn evaluate(model: &TrainedModel, test: &Dataset) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InsufficientData("empty test set".into()));
    }
    if model.class_list != test.class_list || model.params.classes() != test.num_classes() {
        return Err(Error::ClassListMismatch(format!(
            "model has {} classes, test set {}",
            model.class_list.len(),
            test.num_classes()
        )));
    }
    let truth = test.targets()?;
    let pred = predict(model, test)?;
    Ok(report_from_predictions(&test.class_list, &truth, &pred))
}

pub fn report_from_predictions(class_list: &[CharacterLabel], truth: &[usize], pred: &[usize]) -> EvalReport {
    let c = class_list.len();
    let mut confusion = vec![vec![0u64; c]; c];
    for (&t, &p) in truth.iter().zip(pred) {
        confusion[t][p] += 1;
    }
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let n: u64 = row.iter().sum();
            if n == 0 {
                0.0
            } else {
                row[k] as f64 / n as f64
            }
        })
        .collect();
    let mut r = EvalReport {
        protocol: None,
        class_list: class_list.to_vec(),
        accuracy: 0.0,
        per_class_accuracy,
        confusion,
        n_test: truth.len(),
        train_history: Vec::new(),
    };
    r.accuracy = r.trace() as f64 / r.n_test as f64;
    r
}
