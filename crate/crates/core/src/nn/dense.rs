use serde::{Deserialize, Serialize};

use super::activation::relu;
use super::loss::softmax;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Softmax,
}

/// Fully connected layer `y = act(W x + b)`, `W` row-major `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub input_dim: usize,
    pub output_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        DenseLayer { input_dim, output_dim, w: vec![0.0; input_dim * output_dim], b: vec![0.0; output_dim], activation }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim, self.output_dim, self.activation)
    }

    pub fn check_shapes(&self) -> Result<()> {
        if self.w.len() != self.input_dim * self.output_dim || self.b.len() != self.output_dim {
            return Err(Error::Shape(format!(
                "dense layer {}x{} has inconsistent tensors",
                self.output_dim, self.input_dim
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<DenseCache> {
        if x.len() != self.input_dim {
            return Err(Error::Shape(format!("dense forward: input {} for layer input {}", x.len(), self.input_dim)));
        }
        let z: Vec<f64> = (0..self.output_dim)
            .map(|r| {
                let row = &self.w[r * self.input_dim..(r + 1) * self.input_dim];
                self.b[r] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        let y = match self.activation {
            Activation::Relu => z.iter().map(|&v| relu(v)).collect(),
            Activation::Softmax => softmax(&z),
        };
        Ok(DenseCache { x: x.to_vec(), z, y })
    }

    /// Backward from the gradient w.r.t. the activated output.
    pub fn backward(&self, cache: &DenseCache, d_y: &[f64], grads: &mut DenseLayer) -> Result<Vec<f64>> {
        if d_y.len() != self.output_dim {
            return Err(Error::Shape(format!("dense backward: upstream {} for output {}", d_y.len(), self.output_dim)));
        }
        let d_z: Vec<f64> = match self.activation {
            // Subgradient 0 at z = 0.
            Activation::Relu => cache.z.iter().zip(d_y).map(|(&z, &g)| if z > 0.0 { g } else { 0.0 }).collect(),
            Activation::Softmax => {
                let s: f64 = cache.y.iter().zip(d_y).map(|(y, g)| y * g).sum();
                cache.y.iter().zip(d_y).map(|(y, g)| y * (g - s)).collect()
            }
        };
        self.backward_preactivation(cache, &d_z, grads)
    }

    /// Backward from the gradient w.r.t. the pre-activation `z` (fused softmax + cross-entropy).
    pub fn backward_preactivation(&self, cache: &DenseCache, d_z: &[f64], grads: &mut DenseLayer) -> Result<Vec<f64>> {
        if d_z.len() != self.output_dim || cache.x.len() != self.input_dim {
            return Err(Error::Shape("dense backward: cache does not match layer".into()));
        }
        let n = self.input_dim;
        let mut d_x = vec![0.0; n];
        for (r, &g) in d_z.iter().enumerate() {
            grads.b[r] += g;
            let gw = &mut grads.w[r * n..(r + 1) * n];
            let w = &self.w[r * n..(r + 1) * n];
            for k in 0..n {
                gw[k] += g * cache.x[k];
                d_x[k] += g * w[k];
            }
        }
        Ok(d_x)
    }
}
