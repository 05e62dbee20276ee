use super::model::{ModelParams, ModelShape};
use crate::rng;

/// Glorot/Xavier uniform limit `√(6 / (fan_in + fan_out))`.
pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn fill_uniform(w: &mut [f64], rows: usize, cols: usize, r: &mut rng::SplitMix64) {
    let s = glorot_limit(cols, rows);
    for v in w {
        *v = rng::uniform(r, -s, s);
    }
}

/// Glorot-uniform weights per matrix, zero biases except the LSTM forget-gate
/// block which starts at 1. Deterministic in `seed`.
pub fn init_params(shape: &ModelShape, seed: u64) -> ModelParams {
    let mut p = ModelParams::zeros(shape);
    let mut r = rng::stream(seed);
    for l in [&mut p.lstm1, &mut p.lstm2] {
        let (d, h) = (l.input_dim, l.hidden);
        fill_uniform(&mut l.w, 4 * h, d, &mut r);
        fill_uniform(&mut l.u, 4 * h, h, &mut r);
        l.b[h..2 * h].fill(1.0);
    }
    for d in p.hidden.iter_mut().chain(std::iter::once(&mut p.output)) {
        let (rows, cols) = (d.output_dim, d.input_dim);
        fill_uniform(&mut d.w, rows, cols, &mut r);
    }
    p
}
