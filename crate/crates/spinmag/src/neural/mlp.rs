//! Fully-connected network with ReLU hidden layers, identity output, and
//! explicit reverse-mode gradients.
//!
//! Training operates on batches laid out column-per-sample, so the hot path
//! is plain dense matrix products.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("need at least 2 layer dimensions, got {0}")]
    TooFewLayers(usize),
    #[error("input length {got} does not match layer width {expected}")]
    InputDimension { got: usize, expected: usize },
    #[error("gradient shape mismatch at layer {0}")]
    GradientShape(usize),
    #[error("cannot sample {requested} transitions from a buffer of {available}")]
    BufferUnderfilled { requested: usize, available: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layer_dims: Vec<usize>,
    /// weights[l] has shape (layer_dims[l + 1], layer_dims[l]).
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

/// Per-layer gradients with the same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

/// Activations recorded by [`Mlp::forward_batch`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// inputs[l] is the input to layer l (inputs[0] is the batch itself).
    inputs: Vec<DMatrix<f64>>,
    /// Pre-activations of each layer.
    pre_acts: Vec<DMatrix<f64>>,
}

impl Mlp {
    /// Initializes every weight and bias of a layer with k input features
    /// from U(-1/sqrt(k), 1/sqrt(k)). Draw order is fixed (weights row-major,
    /// then biases, layer by layer) so a seed pins the parameters exactly.
    pub fn init(layer_dims: &[usize], rng: &mut ChaCha8Rng) -> Result<Self, NeuralError> {
        if layer_dims.len() < 2 {
            return Err(NeuralError::TooFewLayers(layer_dims.len()));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_dims.len() - 1 {
            let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut w = DMatrix::zeros(fan_out, fan_in);
            for r in 0..fan_out {
                for c in 0..fan_in {
                    w[(r, c)] = rng.random_range(-bound..bound);
                }
            }
            let mut b = DVector::zeros(fan_out);
            for r in 0..fan_out {
                b[r] = rng.random_range(-bound..bound);
            }
            weights.push(w);
            biases.push(b);
        }
        Ok(Self { layer_dims: layer_dims.to_vec(), weights, biases })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &DVector<f64>) -> Result<DVector<f64>, NeuralError> {
        if x.len() != self.input_dim() {
            return Err(NeuralError::InputDimension { got: x.len(), expected: self.input_dim() });
        }
        let batch = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
        let (out, _) = self.forward_batch(&batch)?;
        Ok(out.column(0).into_owned())
    }

    /// Batched forward pass (one sample per column) with cached
    /// pre-activations for [`Mlp::backward_batch`].
    pub fn forward_batch(
        &self,
        x: &DMatrix<f64>,
    ) -> Result<(DMatrix<f64>, ForwardCache), NeuralError> {
        if x.nrows() != self.input_dim() {
            return Err(NeuralError::InputDimension {
                got: x.nrows(),
                expected: self.input_dim(),
            });
        }
        let n_layers = self.weights.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut pre_acts = Vec::with_capacity(n_layers);
        let mut a = x.clone();
        for l in 0..n_layers {
            let mut z = &self.weights[l] * &a;
            for mut col in z.column_iter_mut() {
                col += &self.biases[l];
            }
            inputs.push(a);
            if l + 1 < n_layers {
                a = z.map(relu);
            } else {
                a = z.clone();
            }
            pre_acts.push(z);
        }
        Ok((a, ForwardCache { inputs, pre_acts }))
    }

    /// Reverse-mode gradients of a scalar loss given d(loss)/d(output).
    /// Returns parameter gradients and d(loss)/d(input); the ReLU subgradient
    /// at 0 is 0.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        upstream: &DMatrix<f64>,
    ) -> (MlpGrads, DMatrix<f64>) {
        let n_layers = self.weights.len();
        let mut dw = Vec::with_capacity(n_layers);
        let mut db = Vec::with_capacity(n_layers);
        let mut delta = upstream.clone();

        for l in (0..n_layers).rev() {
            if l + 1 < n_layers {
                // Through the ReLU of layer l.
                delta.zip_apply(&cache.pre_acts[l], |d, z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            dw.push(&delta * cache.inputs[l].transpose());
            let mut b = DVector::zeros(delta.nrows());
            for col in delta.column_iter() {
                b += col;
            }
            db.push(b);
            delta = self.weights[l].transpose() * delta;
        }
        dw.reverse();
        db.reverse();
        (MlpGrads { weights: dw, biases: db }, delta)
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            weights: self.weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect(),
            biases: self.biases.iter().map(|b| DVector::zeros(b.len())).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}
