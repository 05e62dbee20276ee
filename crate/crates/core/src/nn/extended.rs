//! Double-double (≈106-bit) evaluation of the model loss.
//!
//! Central differences at h = 1e-6 in plain f64 carry an absolute error of
//! roughly `ulp(L) / h ≈ 1e-10`, which swamps gradient entries near 1e-8.
//! The gradient checker therefore evaluates `L(θ ± h)` with this separate
//! forward pass. It shares no code with the f64 forward pass it verifies.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::activation::HARD_SIGMOID_KINK;
use super::dense::{Activation, DenseLayer};
use super::lstm::{CellActivation, LstmLayer};
use super::model::{ModelParams, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    fn scale_pow2(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::from_f64(k)).scale_pow2(-9);
        // expm1 by Taylor series; |r| < 7e-4 so 12 terms are far past 106 bits.
        let mut term = r;
        let mut sum = r;
        for n in 2..=12 {
            term = term * r;
            term = term / Dd::from_f64(n as f64);
            sum = sum + term;
        }
        // (1 + s)^2 - 1 = 2s + s^2, nine times undoes the 2^-9 reduction.
        for _ in 0..9 {
            sum = sum.scale_pow2(1) + sum * sum;
        }
        (sum + Dd::ONE).scale_pow2(k as i32)
    }

    pub fn ln(self) -> Dd {
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    pub fn tanh(self) -> Dd {
        if self.hi.abs() > 40.0 {
            return Dd::from_f64(self.hi.signum());
        }
        let t = self.scale_pow2(1).exp();
        (t - Dd::ONE) / (t + Dd::ONE)
    }

    fn max(self, other: Dd) -> Dd {
        if self.cmp_gt(other) {
            self
        } else {
            other
        }
    }

    fn cmp_gt(self, o: Dd) -> bool {
        self.hi > o.hi || (self.hi == o.hi && self.lo > o.lo)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from_f64(q2);
        let q3 = r.hi / b.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e } + Dd::from_f64(q3)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let p = self.hi * b.hi;
        let e = self.hi.mul_add(b.hi, -p);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

fn hard_sigmoid(x: Dd) -> Dd {
    let v = Dd::from_f64(0.2) * x + Dd::from_f64(0.5);
    if v.hi < 0.0 {
        Dd::ZERO
    } else if v.cmp_gt(Dd::ONE) {
        Dd::ONE
    } else {
        v
    }
}

fn region(x: Dd) -> u8 {
    let k = Dd::from_f64(HARD_SIGMOID_KINK);
    if (-k).cmp_gt(x) {
        0
    } else if x.cmp_gt(k) {
        2
    } else {
        1
    }
}

fn squash(act: CellActivation, x: Dd) -> Dd {
    match act {
        CellActivation::Tanh => x.tanh(),
        CellActivation::HardSigmoid => hard_sigmoid(x),
    }
}

fn dot(w: &[Dd], x: &[Dd]) -> Dd {
    let mut acc = Dd::ZERO;
    for (&a, &b) in w.iter().zip(x) {
        acc = acc + a * b;
    }
    acc
}

fn lift(flat: &[f64], perturb: Option<(usize, f64)>) -> Vec<Dd> {
    let mut vals: Vec<Dd> = flat.iter().map(|&v| Dd::from_f64(v)).collect();
    if let Some((idx, delta)) = perturb {
        vals[idx] = vals[idx] + Dd::from_f64(delta);
    }
    vals
}

fn lstm_run(layer: &LstmLayer, vals: &[Dd], xs: &[Dd], steps: usize, sig: &mut Vec<u8>) -> Vec<Dd> {
    let (d, hn) = (layer.input_dim, layer.hidden);
    let (w, rest) = vals.split_at(4 * hn * d);
    let (u, b) = rest.split_at(4 * hn * hn);
    let act = layer.cell_activation;
    let mut h = vec![Dd::ZERO; hn];
    let mut c = vec![Dd::ZERO; hn];
    let mut out = Vec::with_capacity(steps * hn);
    let mut z = vec![Dd::ZERO; 4 * hn];
    for t in 0..steps {
        let x = &xs[t * d..(t + 1) * d];
        for (r, zr) in z.iter_mut().enumerate() {
            *zr = b[r] + dot(&w[r * d..(r + 1) * d], x) + dot(&u[r * hn..(r + 1) * hn], &h);
        }
        for (r, &zr) in z.iter().enumerate() {
            if r / hn != 2 || act == CellActivation::HardSigmoid {
                sig.push(region(zr));
            }
        }
        for j in 0..hn {
            let i = hard_sigmoid(z[j]);
            let f = hard_sigmoid(z[hn + j]);
            let g = squash(act, z[2 * hn + j]);
            let o = hard_sigmoid(z[3 * hn + j]);
            c[j] = f * c[j] + i * g;
            h[j] = o * squash(act, c[j]);
        }
        if act == CellActivation::HardSigmoid {
            sig.extend(c.iter().map(|&v| region(v)));
        }
        out.extend_from_slice(&h);
    }
    out
}

/// Pre-activations and activated outputs of a dense layer.
fn dense_run(layer: &DenseLayer, vals: &[Dd], x: &[Dd], sig: &mut Vec<u8>) -> (Vec<Dd>, Vec<Dd>) {
    let n = layer.input_dim;
    let (w, b) = vals.split_at(n * layer.output_dim);
    let z: Vec<Dd> = b.iter().enumerate().map(|(r, &br)| br + dot(&w[r * n..(r + 1) * n], x)).collect();
    let y = match layer.activation {
        Activation::Relu => z
            .iter()
            .map(|&v| {
                let on = v.hi > 0.0;
                sig.push(u8::from(on));
                if on {
                    v
                } else {
                    Dd::ZERO
                }
            })
            .collect(),
        Activation::Softmax => {
            let m = z.iter().copied().fold(z[0], Dd::max);
            let e: Vec<Dd> = z.iter().map(|&v| (v - m).exp()).collect();
            let s = e.iter().copied().fold(Dd::ZERO, |a, b| a + b);
            e.into_iter().map(|v| v / s).collect()
        }
    };
    (z, y)
}

/// `logsumexp(z) - z[target]`.
pub fn cross_entropy(logits: &[Dd], target: usize) -> Dd {
    let m = logits.iter().copied().fold(logits[0], Dd::max);
    let mut s = Dd::ZERO;
    for &z in logits {
        s = s + (z - m).exp();
    }
    m + s.ln() - logits[target]
}

/// Hidden outputs (`T × H`) of one LSTM layer from zero initial state, with
/// parameter `idx` of its flattened `[W, U, b]` shifted by `delta`.
/// The second value is the activation-region signature.
pub fn lstm_layer_forward(
    layer: &LstmLayer,
    perturb: Option<(usize, f64)>,
    xs: &[f64],
    steps: usize,
) -> (Vec<Dd>, Vec<u8>) {
    let vals = lift(&layer.flatten(), perturb);
    let xs: Vec<Dd> = xs.iter().map(|&v| Dd::from_f64(v)).collect();
    let mut sig = Vec::new();
    let out = lstm_run(layer, &vals, &xs, steps, &mut sig);
    (out, sig)
}

/// Activated outputs of one dense layer; see [`lstm_layer_forward`].
pub fn dense_layer_forward(layer: &DenseLayer, perturb: Option<(usize, f64)>, x: &[f64]) -> (Vec<Dd>, Vec<u8>) {
    let vals = lift(&layer.flatten(), perturb);
    let x: Vec<Dd> = x.iter().map(|&v| Dd::from_f64(v)).collect();
    let mut sig = Vec::new();
    let (_, y) = dense_run(layer, &vals, &x, &mut sig);
    (y, sig)
}

/// Cross-entropy of the full model on one sequence, with flattened parameter
/// `idx` (in [`ParamSet`] order) shifted by `delta`.
pub fn model_loss(
    p: &ModelParams,
    perturb: Option<(usize, f64)>,
    x: &[f64],
    steps: usize,
    target: usize,
) -> (Dd, Vec<u8>) {
    ModelLoss::new(p, x, steps, target).eval(perturb)
}

/// [`model_loss`] with the unperturbed first-layer outputs cached, so shifts
/// of later parameters skip the first LSTM.
pub struct ModelLoss<'a> {
    p: &'a ModelParams,
    flat: Vec<f64>,
    xs: Vec<Dd>,
    steps: usize,
    target: usize,
    h1: Vec<Dd>,
    sig1: Vec<u8>,
}

impl<'a> ModelLoss<'a> {
    pub fn new(p: &'a ModelParams, x: &[f64], steps: usize, target: usize) -> Self {
        let flat = p.flatten();
        let xs: Vec<Dd> = x.iter().map(|&v| Dd::from_f64(v)).collect();
        let n1 = p.lstm1.num_params();
        let mut sig1 = Vec::new();
        let h1 = lstm_run(&p.lstm1, &lift(&flat[..n1], None), &xs, steps, &mut sig1);
        ModelLoss { p, flat, xs, steps, target, h1, sig1 }
    }

    pub fn eval(&self, perturb: Option<(usize, f64)>) -> (Dd, Vec<u8>) {
        let p = self.p;
        let vals = lift(&self.flat, perturb);
        let n1 = p.lstm1.num_params();
        let mut sig;
        let fresh;
        let h1 = match perturb {
            Some((idx, _)) if idx < n1 => {
                sig = Vec::new();
                fresh = lstm_run(&p.lstm1, &vals[..n1], &self.xs, self.steps, &mut sig);
                &fresh
            }
            _ => {
                sig = self.sig1.clone();
                &self.h1
            }
        };
        let mut off = n1;
        let mut take = |n: usize| {
            let s = off;
            off += n;
            s..off
        };
        let r2 = take(p.lstm2.num_params());
        let h2 = lstm_run(&p.lstm2, &vals[r2], h1, self.steps, &mut sig);
        let mut feat = h2[(self.steps - 1) * p.lstm2.hidden..].to_vec();
        for d in &p.hidden {
            let r = take(d.num_params());
            feat = dense_run(d, &vals[r], &feat, &mut sig).1;
        }
        let r = take(p.output.num_params());
        let (logits, _) = dense_run(&p.output, &vals[r], &feat, &mut sig);
        (cross_entropy(&logits, self.target), sig)
    }
}
