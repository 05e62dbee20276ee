use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    argmax, init_params, model_forward, train_step, ModelParams, ModelShape, OptState, RmspropHyper, TrainSample,
};
use crate::rng;
use crate::types::{CharacterLabel, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many epochs without a validation-accuracy gain.
    pub patience: usize,
    /// Global gradient-norm cap; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Share of the training side held out (stratified) for early stopping.
    pub val_fraction: f64,
    /// Fresh initializations tried after a divergence.
    pub max_restarts: usize,
    pub extra_dense: bool,
    pub hard_sigmoid_everywhere: bool,
}

impl Default for TrainHyper {
    fn default() -> Self {
        let opt = RmspropHyper::default();
        TrainHyper {
            learning_rate: opt.learning_rate,
            rho: opt.rho,
            epsilon: opt.epsilon,
            batch_size: 32,
            max_epochs: 200,
            patience: 20,
            clip_norm: Some(5.0),
            val_fraction: 0.1,
            max_restarts: 3,
            extra_dense: false,
            hard_sigmoid_everywhere: false,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.rho)
            && self.epsilon > 0.0
            && self.batch_size > 0
            && self.max_epochs > 0
            && (0.0..1.0).contains(&self.val_fraction)
            && self.clip_norm.is_none_or(|c| c > 0.0);
        if !ok {
            return Err(Error::Config(format!("invalid training hyperparameters {self:?}")));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> RmspropHyper {
        RmspropHyper { learning_rate: self.learning_rate, rho: self.rho, epsilon: self.epsilon }
    }

    pub fn shape(&self, classes: usize) -> ModelShape {
        ModelShape {
            dense_layers: if self.extra_dense { 2 } else { 1 },
            hard_sigmoid_everywhere: self.hard_sigmoid_everywhere,
            ..ModelShape::paper(classes)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub loss: f64,
    /// Accuracy of the pre-update predictions made during the epoch.
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

/// Parameters together with the class list that defines their output order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub class_list: Vec<CharacterLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub history: Vec<EpochRecord>,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: usize,
    pub restarts: usize,
}

pub(crate) fn accuracy_on(p: &ModelParams, samples: &[TrainSample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for s in samples {
        let pass = model_forward(p, &s.x, s.steps)?;
        hits += usize::from(argmax(pass.probs()) == s.target);
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Trains with RMSprop on shuffled mini-batches and keeps the parameters of
/// the epoch with the best validation accuracy (earliest on ties).
///
/// A non-finite loss restarts from a re-seeded initialization, up to
/// `max_restarts` times. An empty `val` falls back to training accuracy.
pub fn train_model(train: &Dataset, val: &Dataset, hyper: &TrainHyper, seed: u64) -> Result<TrainOutcome> {
    hyper.validate()?;
    if train.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if train.class_list != val.class_list {
        return Err(Error::ClassListMismatch("train and validation class lists differ".into()));
    }
    let train_s = TrainSample::from_dataset(train)?;
    let val_s = TrainSample::from_dataset(val)?;
    let shape = hyper.shape(train.num_classes());
    let mut last_err = None;
    for attempt in 0..=hyper.max_restarts {
        let run_seed = rng::derive_seed(seed, attempt as u64);
        match fit(&train_s, &val_s, &shape, hyper, run_seed) {
            Ok((params, history, best_epoch)) => {
                info!("trained {} epochs (best {}) after {attempt} restarts", history.len(), best_epoch);
                return Ok(TrainOutcome {
                    model: TrainedModel { params, class_list: train.class_list.clone() },
                    history,
                    best_epoch,
                    restarts: attempt,
                });
            }
            Err(e @ Error::Diverged { .. }) => {
                warn!("attempt {attempt}: {e}");
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::TrainingFailed(format!(
        "diverged after {} restarts: {}",
        hyper.max_restarts,
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

fn fit(
    train: &[TrainSample],
    val: &[TrainSample],
    shape: &ModelShape,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<(ModelParams, Vec<EpochRecord>, usize)> {
    let mut p = init_params(shape, rng::derive_seed(seed, 0));
    let mut opt = OptState::new(&p, hyper.optimizer());
    let mut order_rng = rng::stream(rng::derive_seed(seed, 1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best = (f64::NEG_INFINITY, 0, p.clone());
    for epoch in 0..hyper.max_epochs {
        rng::shuffle(&mut order, &mut order_rng);
        let (mut loss_sum, mut correct) = (0.0, 0);
        for chunk in order.chunks(hyper.batch_size) {
            let batch: Vec<&TrainSample> = chunk.iter().map(|&k| &train[k]).collect();
            let stats = train_step(&mut p, &mut opt, &batch, hyper.clip_norm)?;
            loss_sum += stats.mean_loss * batch.len() as f64;
            correct += stats.correct;
        }
        let train_accuracy = correct as f64 / train.len() as f64;
        let val_accuracy = if val.is_empty() { train_accuracy } else { accuracy_on(&p, val)? };
        let rec = EpochRecord { loss: loss_sum / train.len() as f64, train_accuracy, val_accuracy };
        debug!("epoch {epoch}: {rec:?}");
        history.push(rec);
        if val_accuracy > best.0 {
            best = (val_accuracy, epoch, p.clone());
        } else if epoch - best.1 >= hyper.patience {
            break;
        }
    }
    Ok((best.2, history, best.1))
}
