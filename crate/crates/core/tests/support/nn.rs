use strokesense::nn::extended::{dense_layer_forward, lstm_layer_forward, Dd};
use strokesense::nn::{
    grad_check, grad_check_with, init_params, rmsprop_update, Activation, CellActivation, DenseLayer, LstmLayer,
    ModelShape, ParamSet, RmspropHyper, TrainSample,
};
use strokesense::rng::{self, SplitMix64};
use strokesense::synth::{default_glyphs, generate_dataset, WriterStyle};
use strokesense::train_eval::{evaluate, train_model, TrainHyper, TrainOutcome};
use strokesense::types::{Alphabet, Dataset};

pub fn random_vec(n: usize, scale: f64, r: &mut SplitMix64) -> Vec<f64> {
    (0..n).map(|_| rng::uniform(r, -scale, scale)).collect()
}

pub fn random_lstm(d: usize, h: usize, act: CellActivation, r: &mut SplitMix64) -> LstmLayer {
    let mut l = LstmLayer::zeros(d, h);
    l.w = random_vec(4 * h * d, 1.0, r);
    l.u = random_vec(4 * h * h, 1.0, r);
    l.b = random_vec(4 * h, 0.5, r);
    l.cell_activation = act;
    l
}

pub fn weighted_sum(w: &[f64], ys: &[Dd]) -> Dd {
    w.iter().zip(ys).fold(Dd::from_f64(0.0), |acc, (&a, &y)| acc + Dd::from_f64(a) * y)
}

/// Analytic gradient of Σ w·h for an LSTM layer, flattened as [W, U, b].
pub fn lstm_analytic(l: &LstmLayer, xs: &[f64], steps: usize, w: &[f64]) -> Vec<f64> {
    let cache = l.forward(xs, steps, &vec![0.0; l.hidden], &vec![0.0; l.hidden]).unwrap();
    let mut g = l.zeros_like();
    l.backward(&cache, w, &mut g).unwrap();
    g.flatten()
}

/// Max relative error of an isolated LSTM layer (D=3, H=4, T=5).
pub fn lstm_check(seed: u64, act: CellActivation) -> f64 {
    let mut r = rng::stream(seed);
    let (d, h, t) = (3, 4, 5);
    let l = random_lstm(d, h, act, &mut r);
    let xs = random_vec(t * d, 1.0, &mut r);
    let w = random_vec(t * h, 1.0, &mut r);
    let analytic = lstm_analytic(&l, &xs, t, &w);
    let rep = grad_check_with(&analytic, 1e-6, 0..analytic.len(), |p| {
        let (ys, sig) = lstm_layer_forward(&l, p, &xs, t);
        (weighted_sum(&w, &ys), sig)
    });
    assert!(rep.checked > analytic.len() / 2, "too many kink skips: {rep:?}");
    rep.max_rel_error
}

/// Max relative error of an isolated 5→7 dense layer.
pub fn dense_check(seed: u64, act: Activation) -> f64 {
    let mut r = rng::stream(seed);
    let mut l = DenseLayer::zeros(5, 7, act);
    l.w = random_vec(35, 1.0, &mut r);
    l.b = random_vec(7, 0.5, &mut r);
    let x = random_vec(5, 1.0, &mut r);
    let w = random_vec(7, 1.0, &mut r);
    let cache = l.forward(&x).unwrap();
    let mut g = l.zeros_like();
    l.backward(&cache, &w, &mut g).unwrap();
    let analytic = g.flatten();
    let rep = grad_check_with(&analytic, 1e-6, 0..analytic.len(), |p| {
        let (ys, sig) = dense_layer_forward(&l, p, &x);
        (weighted_sum(&w, &ys), sig)
    });
    rep.max_rel_error
}

/// Worst per-layer error over 20 seeds of each layer kind.
pub fn worst_layer_error() -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        worst = worst
            .max(lstm_check(seed, CellActivation::Tanh))
            .max(lstm_check(seed, CellActivation::HardSigmoid))
            .max(dense_check(seed, Activation::Relu))
            .max(dense_check(seed, Activation::Softmax));
    }
    worst
}

pub fn sample(steps: usize, classes: usize, seed: u64) -> TrainSample {
    let mut r = rng::stream(seed);
    TrainSample {
        id: format!("s{seed}"),
        x: random_vec(steps * 6, 1.0, &mut r),
        steps,
        target: seed as usize % classes,
    }
}

/// Whole paper-shaped model, C=4, T=12.
pub fn paper_model_error(seed: u64) -> f64 {
    let p = init_params(&ModelShape::paper(4), seed);
    let rep = grad_check(&p, &sample(12, 4, seed), 1e-6).unwrap();
    assert!(rep.checked > 0);
    rep.max_rel_error
}

/// |Δθ| of one RMSprop step from θ=0, v=0 with g=1; also asserts v=0.1.
pub fn rmsprop_single_step() -> f64 {
    let hyper = RmspropHyper { learning_rate: 0.001, rho: 0.9, epsilon: 1e-8 };
    let (mut theta, mut v) = (vec![0.0], vec![0.0]);
    rmsprop_update(&mut theta, &mut v, &[1.0], &hyper);
    assert!((v[0] - 0.1).abs() < 1e-15, "v = {}", v[0]);
    let expected = 0.001 / (0.1f64.sqrt() + 1e-8);
    assert!((theta[0] + expected).abs() < 1e-15);
    theta[0].abs()
}

pub fn corpus(classes: usize, writers: usize, per_class: usize, seed: u64) -> Dataset {
    let glyphs = default_glyphs(Alphabet::Latin, classes);
    generate_dataset(Alphabet::Latin, &glyphs, &WriterStyle::population(writers, seed), per_class, seed).unwrap()
}

/// 2 classes × 10 sequences, trained and scored on the same data for up to
/// 500 epochs. Returns the outcome and the final training accuracy.
pub fn overfit_two_classes() -> (TrainOutcome, f64) {
    let ds = corpus(2, 1, 10, 4);
    assert_eq!(ds.len(), 20);
    let hyper =
        TrainHyper { learning_rate: 0.01, batch_size: 4, max_epochs: 500, patience: 500, ..TrainHyper::default() };
    let out = train_model(&ds, &ds, &hyper, 1).unwrap();
    assert!(out.history.iter().all(|h| h.loss.is_finite()));
    let acc = evaluate(&out.model, &ds).unwrap().accuracy;
    (out, acc)
}
