use serde::{Deserialize, Serialize};

use super::model::{argmax, loss_and_gradients, ModelParams, ParamSet, TrainSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmspropHyper {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for RmspropHyper {
    fn default() -> Self {
        RmspropHyper { learning_rate: 0.001, rho: 0.9, epsilon: 1e-8 }
    }
}

/// RMSprop accumulators (running mean of squared gradients), one per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub v: ModelParams,
    pub hyper: RmspropHyper,
}

impl OptState {
    pub fn new(p: &ModelParams, hyper: RmspropHyper) -> Self {
        OptState { v: p.zeros_like(), hyper }
    }

    /// Applies one update with gradients `g`.
    pub fn apply(&mut self, p: &mut ModelParams, g: &ModelParams) {
        for ((theta, v), g) in p.tensors_mut().into_iter().zip(self.v.tensors_mut()).zip(g.tensors()) {
            rmsprop_update(theta, v, g, &self.hyper);
        }
    }
}

/// `v ← ρ v + (1 − ρ) g²;  θ ← θ − lr · g / (√v + ε)`.
pub fn rmsprop_update(theta: &mut [f64], v: &mut [f64], g: &[f64], hyper: &RmspropHyper) {
    let RmspropHyper { learning_rate, rho, epsilon } = *hyper;
    for ((t, v), &g) in theta.iter_mut().zip(v.iter_mut()).zip(g) {
        *v = rho * *v + (1.0 - rho) * g * g;
        *t -= learning_rate * g / (v.sqrt() + epsilon);
    }
}

/// Rescales `g` in place so its global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(g: &mut ModelParams, max_norm: f64) -> f64 {
    let norm = g.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        for t in g.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }
    norm
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub mean_loss: f64,
    /// Samples whose pre-update prediction was right.
    pub correct: usize,
}

/// One mini-batch update: mean loss, averaged gradients, optional clipping, RMSprop.
///
/// Per-sample gradients are summed in batch order, so results do not depend
/// on how the work is scheduled.
pub fn train_step(
    p: &mut ModelParams,
    opt: &mut OptState,
    batch: &[&TrainSample],
    clip_norm: Option<f64>,
) -> Result<StepStats> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let mut grads = p.zeros_like();
    let mut total = 0.0;
    let mut correct = 0;
    for s in batch {
        let (loss, probs) = loss_and_gradients(p, s, &mut grads)?;
        total += loss;
        correct += usize::from(argmax(&probs) == s.target);
    }
    let mean_loss = total / batch.len() as f64;
    let grads_finite = grads.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()));
    if !mean_loss.is_finite() || !grads_finite {
        return Err(Error::Diverged { batch_ids: batch.iter().map(|s| s.id.clone()).collect() });
    }
    let inv = 1.0 / batch.len() as f64;
    for t in grads.tensors_mut() {
        t.iter_mut().for_each(|v| *v *= inv);
    }
    if let Some(max) = clip_norm {
        clip_global_norm(&mut grads, max);
    }
    opt.apply(p, &grads);
    Ok(StepStats { mean_loss, correct })
}
