use serde::{Deserialize, Serialize};

use super::dense::{Activation, DenseCache, DenseLayer};
use super::loss::softmax_cross_entropy;
use super::lstm::{CellActivation, LstmCache, LstmLayer};
use crate::error::{Error, Result};
use crate::preprocess::{scale_sequence, PaddedBatch};
use crate::types::{Dataset, LabeledSequence, CHANNELS};

/// Layer sizes of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub input_dim: usize,
    pub lstm1_units: usize,
    pub lstm2_units: usize,
    pub dense_units: usize,
    /// Hidden ReLU layers before the softmax classifier (1 by default, 2 with `extra_dense`).
    pub dense_layers: usize,
    pub classes: usize,
    pub hard_sigmoid_everywhere: bool,
}

impl ModelShape {
    /// LSTM(20) → LSTM(25) → Dense(25, ReLU) → Dense(C, softmax) over 6 channels.
    pub fn paper(classes: usize) -> Self {
        ModelShape {
            input_dim: CHANNELS,
            lstm1_units: 20,
            lstm2_units: 25,
            dense_units: 25,
            dense_layers: 1,
            classes,
            hard_sigmoid_everywhere: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Shape(format!("need at least 2 classes, got {}", self.classes)));
        }
        if [self.input_dim, self.lstm1_units, self.lstm2_units, self.dense_units, self.dense_layers].contains(&0) {
            return Err(Error::Shape("layer sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn cell_activation(&self) -> CellActivation {
        if self.hard_sigmoid_everywhere {
            CellActivation::HardSigmoid
        } else {
            CellActivation::Tanh
        }
    }
}

/// All trainable tensors of the classifier. The same type holds gradients
/// and optimizer accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub lstm1: LstmLayer,
    pub lstm2: LstmLayer,
    /// ReLU layers, `dense_layers` of them.
    pub hidden: Vec<DenseLayer>,
    pub output: DenseLayer,
}

/// Uniform access to a parameter collection as a list of flat tensors.
pub trait ParamSet {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }
}

impl ParamSet for LstmLayer {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.w, &self.u, &self.b]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w, &mut self.u, &mut self.b]
    }
}

impl ParamSet for DenseLayer {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.w, &self.b]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w, &mut self.b]
    }
}

impl ParamSet for ModelParams {
    /// Order: lstm1 W, U, b; lstm2 W, U, b; each hidden dense W, b; output W, b.
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.lstm1.tensors();
        v.extend(self.lstm2.tensors());
        for d in &self.hidden {
            v.extend(d.tensors());
        }
        v.extend(self.output.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.lstm1.tensors_mut();
        v.extend(self.lstm2.tensors_mut());
        for d in &mut self.hidden {
            v.extend(d.tensors_mut());
        }
        v.extend(self.output.tensors_mut());
        v
    }
}

impl ModelParams {
    pub fn zeros(shape: &ModelShape) -> Self {
        let act = shape.cell_activation();
        let mut lstm1 = LstmLayer::zeros(shape.input_dim, shape.lstm1_units);
        let mut lstm2 = LstmLayer::zeros(shape.lstm1_units, shape.lstm2_units);
        lstm1.cell_activation = act;
        lstm2.cell_activation = act;
        let mut hidden = Vec::with_capacity(shape.dense_layers);
        let mut width = shape.lstm2_units;
        for _ in 0..shape.dense_layers {
            hidden.push(DenseLayer::zeros(width, shape.dense_units, Activation::Relu));
            width = shape.dense_units;
        }
        ModelParams { lstm1, lstm2, hidden, output: DenseLayer::zeros(width, shape.classes, Activation::Softmax) }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams::zeros(&self.shape())
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            input_dim: self.lstm1.input_dim,
            lstm1_units: self.lstm1.hidden,
            lstm2_units: self.lstm2.hidden,
            dense_units: self.hidden.first().map_or(self.lstm2.hidden, |d| d.output_dim),
            dense_layers: self.hidden.len(),
            classes: self.output.output_dim,
            hard_sigmoid_everywhere: self.lstm1.cell_activation == CellActivation::HardSigmoid,
        }
    }

    pub fn classes(&self) -> usize {
        self.output.output_dim
    }

    pub fn check(&self) -> Result<()> {
        self.lstm1.check_shapes()?;
        self.lstm2.check_shapes()?;
        let mut width = self.lstm2.hidden;
        if self.lstm2.input_dim != self.lstm1.hidden {
            return Err(Error::Shape("lstm2 input does not match lstm1 units".into()));
        }
        for d in self.hidden.iter().chain(std::iter::once(&self.output)) {
            d.check_shapes()?;
            if d.input_dim != width {
                return Err(Error::Shape("dense chain is not dimensionally consistent".into()));
            }
            width = d.output_dim;
        }
        if self.hidden.iter().any(|d| d.activation != Activation::Relu) || self.output.activation != Activation::Softmax
        {
            return Err(Error::Shape("unexpected layer activations".into()));
        }
        if self.classes() < 2 {
            return Err(Error::Shape("need at least 2 classes".into()));
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(())
    }

    /// Adds `scale * other` to every parameter.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn fill(&mut self, v: f64) {
        for t in self.tensors_mut() {
            t.fill(v);
        }
    }
}

/// A model input: scaled `T × 6` time-major sequence and its class.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub id: String,
    /// `steps × 6`, entries in [-1, 1].
    pub x: Vec<f64>,
    pub steps: usize,
    pub target: usize,
}

impl TrainSample {
    /// Scales the item's 6×T matrix and transposes it for the network.
    pub fn from_item(item: &LabeledSequence, target: usize) -> Result<Self> {
        let m = scale_sequence(&item.sequence.to_matrix()?)?;
        Ok(TrainSample { id: item.id.clone(), x: m.to_time_major(), steps: m.cols(), target })
    }

    pub fn from_dataset(ds: &Dataset) -> Result<Vec<Self>> {
        ds.items.iter().zip(ds.targets()?).map(|(it, y)| Self::from_item(it, y)).collect()
    }

    pub fn one_hot(&self, classes: usize) -> Vec<f64> {
        let mut y = vec![0.0; classes];
        y[self.target] = 1.0;
        y
    }
}

/// Caches of one forward pass through the full model.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub lstm1: LstmCache,
    pub lstm2: LstmCache,
    pub hidden: Vec<DenseCache>,
    pub output: DenseCache,
    /// Step whose lstm2 state fed the dense stack.
    pub read_step: usize,
}

impl ForwardPass {
    pub fn probs(&self) -> &[f64] {
        &self.output.y
    }

    pub fn logits(&self) -> &[f64] {
        &self.output.z
    }
}

/// Runs the model over `x` (`len × 6`).
pub fn model_forward(p: &ModelParams, x: &[f64], len: usize) -> Result<ForwardPass> {
    model_forward_padded(p, x, len, len)
}

/// Runs both LSTMs over `steps` rows of `x` (possibly zero padding) and
/// classifies from the lstm2 state at step `len - 1`.
pub fn model_forward_padded(p: &ModelParams, x: &[f64], steps: usize, len: usize) -> Result<ForwardPass> {
    if len == 0 || len > steps {
        return Err(Error::Shape(format!("true length {len} outside 1..={steps}")));
    }
    if x.len() != steps * p.lstm1.input_dim {
        return Err(Error::Shape(format!("input has {} values, expected {steps} x {}", x.len(), p.lstm1.input_dim)));
    }
    let h1 = vec![0.0; p.lstm1.hidden];
    let h2 = vec![0.0; p.lstm2.hidden];
    let lstm1 = p.lstm1.forward(x, steps, &h1, &h1)?;
    let lstm2 = p.lstm2.forward(lstm1.outputs(), steps, &h2, &h2)?;
    let mut hidden = Vec::with_capacity(p.hidden.len());
    let mut feat = lstm2.hidden(len - 1).to_vec();
    for d in &p.hidden {
        let c = d.forward(&feat)?;
        feat = c.y.clone();
        hidden.push(c);
    }
    let output = p.output.forward(&feat)?;
    Ok(ForwardPass { lstm1, lstm2, hidden, output, read_step: len - 1 })
}

/// Forward passes over every item of a padded batch.
pub fn forward_batch(p: &ModelParams, batch: &PaddedBatch) -> Result<Vec<ForwardPass>> {
    (0..batch.batch).map(|b| model_forward_padded(p, batch.item(b), batch.max_len, batch.lengths[b])).collect()
}

/// Backpropagates `d_logits` through a cached pass, accumulating into `grads`.
/// Returns the gradient w.r.t. the model input.
pub(crate) fn backward(
    p: &ModelParams,
    pass: &ForwardPass,
    d_logits: &[f64],
    grads: &mut ModelParams,
) -> Result<Vec<f64>> {
    let mut d = p.output.backward_preactivation(&pass.output, d_logits, &mut grads.output)?;
    for ((layer, cache), g) in p.hidden.iter().zip(&pass.hidden).zip(grads.hidden.iter_mut()).rev() {
        d = layer.backward(cache, &d, g)?;
    }
    let steps = pass.lstm2.steps;
    let h2 = p.lstm2.hidden;
    let mut d_h2 = vec![0.0; steps * h2];
    d_h2[pass.read_step * h2..(pass.read_step + 1) * h2].copy_from_slice(&d);
    let d_h1 = p.lstm2.backward(&pass.lstm2, &d_h2, &mut grads.lstm2)?;
    p.lstm1.backward(&pass.lstm1, &d_h1, &mut grads.lstm1)
}

/// Loss for one sample; gradients are added (unscaled) into `grads`.
/// Returns `(loss, probs)`.
pub fn loss_and_gradients(p: &ModelParams, sample: &TrainSample, grads: &mut ModelParams) -> Result<(f64, Vec<f64>)> {
    let pass = model_forward(p, &sample.x, sample.steps)?;
    if sample.target >= p.classes() {
        return Err(Error::Shape(format!("target {} outside {} classes", sample.target, p.classes())));
    }
    let (loss, d_logits, probs) = softmax_cross_entropy(pass.logits(), sample.target);
    backward(p, &pass, &d_logits, grads)?;
    Ok((loss, probs))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = k;
        }
    }
    best
}
