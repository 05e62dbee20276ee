//! Central finite-difference verification of the analytic gradients.

use super::extended::{Dd, ModelLoss};
use super::model::{loss_and_gradients, ModelParams, ParamSet, TrainSample};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    All,
    Lstm,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|a − n| / max(|a|, |n|, 1e-8)` over checked coordinates.
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub checked: usize,
    /// Coordinates whose ±h perturbation moved some activation across a kink.
    pub skipped: usize,
}

pub fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

/// Compares `analytic` with central differences `(L(θ+h) − L(θ−h)) / 2h` at
/// each index in `coords`.
///
/// `eval(Some((idx, δ)))` returns the loss with coordinate `idx` shifted by `δ`
/// together with a kink signature (activation regime codes). A coordinate is
/// skipped when the signature at θ±h differs from the one at θ, since the
/// difference quotient then straddles a kink. The loss difference is formed in
/// double-double before dividing by `2h`.
pub fn grad_check_with(
    analytic: &[f64],
    h: f64,
    coords: impl IntoIterator<Item = usize>,
    mut eval: impl FnMut(Option<(usize, f64)>) -> (Dd, Vec<u8>),
) -> GradCheckReport {
    let (_, base_sig) = eval(None);
    let mut report = GradCheckReport { max_rel_error: 0.0, worst_index: 0, checked: 0, skipped: 0 };
    for idx in coords {
        let (lp, sp) = eval(Some((idx, h)));
        let (lm, sm) = eval(Some((idx, -h)));
        if sp != base_sig || sm != base_sig {
            report.skipped += 1;
            continue;
        }
        let numeric = (lp - lm).to_f64() / (2.0 * h);
        let err = rel_error(analytic[idx], numeric);
        report.checked += 1;
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = idx;
        }
    }
    report
}

/// Gradient check over every parameter of the model on one sample.
pub fn grad_check(p: &ModelParams, sample: &TrainSample, h: f64) -> Result<GradCheckReport> {
    grad_check_coords(p, sample, h, ParamGroup::All)
}

/// Gradient check restricted to one parameter group.
pub fn grad_check_coords(p: &ModelParams, sample: &TrainSample, h: f64, group: ParamGroup) -> Result<GradCheckReport> {
    let mut grads = p.zeros_like();
    loss_and_gradients(p, sample, &mut grads)?;
    let analytic = grads.flatten();
    let lstm_len = p.lstm1.num_params() + p.lstm2.num_params();
    let range = match group {
        ParamGroup::All => 0..analytic.len(),
        ParamGroup::Lstm => 0..lstm_len,
        ParamGroup::Dense => lstm_len..analytic.len(),
    };
    let eval = ModelLoss::new(p, &sample.x, sample.steps, sample.target);
    Ok(grad_check_with(&analytic, h, range, |perturb| eval.eval(perturb)))
}
