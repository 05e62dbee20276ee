use serde::{Deserialize, Serialize};

use super::activation::{hard_sigmoid, hard_sigmoid_grad};
use crate::error::{Error, Result};

/// Squashing used for the candidate and the cell output. Gates always use the hard sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CellActivation {
    #[default]
    Tanh,
    HardSigmoid,
}

impl CellActivation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            CellActivation::Tanh => x.tanh(),
            CellActivation::HardSigmoid => hard_sigmoid(x),
        }
    }

    /// Derivative expressed through input `x` and output `y`.
    #[inline]
    fn grad(self, x: f64, y: f64) -> f64 {
        match self {
            CellActivation::Tanh => 1.0 - y * y,
            CellActivation::HardSigmoid => hard_sigmoid_grad(x),
        }
    }
}

/// One LSTM layer: `W` is `4H × D`, `U` is `4H × H`, `b` is `4H`, gate blocks `[i, f, g, o]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub input_dim: usize,
    pub hidden: usize,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
    pub cell_activation: CellActivation,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub steps: usize,
    /// `T × D` inputs.
    pub xs: Vec<f64>,
    /// `(T + 1) × H`; row 0 is the initial state.
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    /// `T × 4H` pre-activations.
    pub pre: Vec<f64>,
    /// `T × 4H` activated gates.
    pub gates: Vec<f64>,
    /// `T × H` squashed cell state.
    pub cell_out: Vec<f64>,
}

impl LstmCache {
    /// Hidden state after step `t` (0-based).
    pub fn hidden(&self, t: usize) -> &[f64] {
        let h = self.h.len() / (self.steps + 1);
        &self.h[(t + 1) * h..(t + 2) * h]
    }

    pub fn cell(&self, t: usize) -> &[f64] {
        let h = self.c.len() / (self.steps + 1);
        &self.c[(t + 1) * h..(t + 2) * h]
    }

    /// `T × H` hidden states for steps 1..=T.
    pub fn outputs(&self) -> &[f64] {
        let h = self.h.len() / (self.steps + 1);
        &self.h[h..]
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * k + l] * b[4 * k + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl LstmLayer {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmLayer {
            input_dim,
            hidden,
            w: vec![0.0; 4 * hidden * input_dim],
            u: vec![0.0; 4 * hidden * hidden],
            b: vec![0.0; 4 * hidden],
            cell_activation: CellActivation::Tanh,
        }
    }

    pub fn zeros_like(&self) -> Self {
        LstmLayer { cell_activation: self.cell_activation, ..Self::zeros(self.input_dim, self.hidden) }
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (d, h) = (self.input_dim, self.hidden);
        if self.w.len() != 4 * h * d || self.u.len() != 4 * h * h || self.b.len() != 4 * h {
            return Err(Error::Shape(format!("LSTM layer H={h} D={d} has inconsistent tensors")));
        }
        Ok(())
    }

    /// Runs the recurrence over `steps` rows of `xs` from the given initial state.
    pub fn forward(&self, xs: &[f64], steps: usize, h0: &[f64], c0: &[f64]) -> Result<LstmCache> {
        let (d, hn) = (self.input_dim, self.hidden);
        if xs.len() < steps * d || h0.len() != hn || c0.len() != hn {
            return Err(Error::Shape(format!(
                "LSTM forward: {} inputs for T={steps} D={d}, state {}/{} for H={hn}",
                xs.len(),
                h0.len(),
                c0.len()
            )));
        }
        let g4 = 4 * hn;
        let mut cache = LstmCache {
            steps,
            xs: xs[..steps * d].to_vec(),
            h: vec![0.0; (steps + 1) * hn],
            c: vec![0.0; (steps + 1) * hn],
            pre: vec![0.0; steps * g4],
            gates: vec![0.0; steps * g4],
            cell_out: vec![0.0; steps * hn],
        };
        cache.h[..hn].copy_from_slice(h0);
        cache.c[..hn].copy_from_slice(c0);
        let act = self.cell_activation;
        for t in 0..steps {
            let x = &xs[t * d..(t + 1) * d];
            let (h_prev, h_rest) = cache.h[t * hn..].split_at_mut(hn);
            let (c_prev, c_rest) = cache.c[t * hn..].split_at_mut(hn);
            let pre = &mut cache.pre[t * g4..(t + 1) * g4];
            for (r, z) in pre.iter_mut().enumerate() {
                *z = self.b[r] + dot(&self.w[r * d..(r + 1) * d], x) + dot(&self.u[r * hn..(r + 1) * hn], h_prev);
            }
            let gates = &mut cache.gates[t * g4..(t + 1) * g4];
            for j in 0..hn {
                let i = hard_sigmoid(pre[j]);
                let f = hard_sigmoid(pre[hn + j]);
                let g = act.apply(pre[2 * hn + j]);
                let o = hard_sigmoid(pre[3 * hn + j]);
                gates[j] = i;
                gates[hn + j] = f;
                gates[2 * hn + j] = g;
                gates[3 * hn + j] = o;
                let c = f * c_prev[j] + i * g;
                let co = act.apply(c);
                c_rest[j] = c;
                cache.cell_out[t * hn + j] = co;
                h_rest[j] = o * co;
            }
        }
        Ok(cache)
    }

    /// Reverse mode through the whole recurrence.
    ///
    /// `d_h` holds the upstream gradient for every step's hidden output
    /// (`T × H`). Parameter gradients are accumulated into `grads`; the
    /// returned vector is the gradient w.r.t. the inputs (`T × D`).
    pub fn backward(&self, cache: &LstmCache, d_h: &[f64], grads: &mut LstmLayer) -> Result<Vec<f64>> {
        let (d, hn, steps) = (self.input_dim, self.hidden, cache.steps);
        if d_h.len() != steps * hn || cache.xs.len() != steps * d || cache.pre.len() != steps * 4 * hn {
            return Err(Error::Shape(format!(
                "LSTM backward: cache T={steps} does not match layer H={hn} D={d} / d_h {}",
                d_h.len()
            )));
        }
        let g4 = 4 * hn;
        let act = self.cell_activation;
        let mut dx = vec![0.0; steps * d];
        let mut dh_next = vec![0.0; hn];
        let mut dc_next = vec![0.0; hn];
        let mut dz = vec![0.0; g4];
        for t in (0..steps).rev() {
            let gates = &cache.gates[t * g4..(t + 1) * g4];
            let pre = &cache.pre[t * g4..(t + 1) * g4];
            let c_prev = &cache.c[t * hn..(t + 1) * hn];
            let c_cur = &cache.c[(t + 1) * hn..(t + 2) * hn];
            let h_prev = &cache.h[t * hn..(t + 1) * hn];
            let x = &cache.xs[t * d..(t + 1) * d];
            for j in 0..hn {
                let (i, f, g, o) = (gates[j], gates[hn + j], gates[2 * hn + j], gates[3 * hn + j]);
                let co = cache.cell_out[t * hn + j];
                let dh = d_h[t * hn + j] + dh_next[j];
                let d_o = dh * co;
                let dc = dh * o * act.grad(c_cur[j], co) + dc_next[j];
                let di = dc * g;
                let dg = dc * i;
                let df = dc * c_prev[j];
                dc_next[j] = dc * f;
                dz[j] = di * hard_sigmoid_grad(pre[j]);
                dz[hn + j] = df * hard_sigmoid_grad(pre[hn + j]);
                dz[2 * hn + j] = dg * act.grad(pre[2 * hn + j], g);
                dz[3 * hn + j] = d_o * hard_sigmoid_grad(pre[3 * hn + j]);
            }
            dh_next.fill(0.0);
            let dx_t = &mut dx[t * d..(t + 1) * d];
            for (r, &dzr) in dz.iter().enumerate() {
                if dzr == 0.0 {
                    continue;
                }
                grads.b[r] += dzr;
                axpy(dzr, x, &mut grads.w[r * d..(r + 1) * d]);
                axpy(dzr, h_prev, &mut grads.u[r * hn..(r + 1) * hn]);
                axpy(dzr, &self.w[r * d..(r + 1) * d], dx_t);
                axpy(dzr, &self.u[r * hn..(r + 1) * hn], &mut dh_next);
            }
        }
        Ok(dx)
    }
}
