//! The generator network: a fixed fully-connected MLP with ReLU hidden
//! layers and an identity output layer, differentiated by hand, plus the
//! Adam update it is trained with.
//!
//! All arithmetic is 64-bit. Batches are row-major: one sample per row.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::rng::stream_rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative as a function of the pre-activation.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One dense layer `a = act(x W + b)` with `W` of shape in×out.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.cols() != bias.len() {
            return Err(Error::ShapeMismatch(format!(
                "layer weights are {}x{} but bias has length {}",
                weights.rows(),
                weights.cols(),
                bias.len()
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    #[inline]
    fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    fn out_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Adam hyperparameters. Defaults are the canonical lr=0.001,
/// beta1=0.9, beta2=0.999, epsilon=1e-8.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second Adam moments, mirroring the parameter shapes.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct AdamState {
    m_weights: Vec<Matrix>,
    v_weights: Vec<Matrix>,
    m_bias: Vec<Vec<f64>>,
    v_bias: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    fn zeros_like(layers: &[DenseLayer]) -> Self {
        Self {
            m_weights: layers
                .iter()
                .map(|l| Matrix::zeros(l.weights.rows(), l.weights.cols()))
                .collect(),
            v_weights: layers
                .iter()
                .map(|l| Matrix::zeros(l.weights.rows(), l.weights.cols()))
                .collect(),
            m_bias: layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
            v_bias: layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
            step: 0,
        }
    }
}

/// Generator parameters plus optimizer state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorParams {
    layers: Vec<DenseLayer>,
    adam: AdamState,
    /// Bumped on every parameter mutation; forward caches record the value
    /// they were built against so stale backward passes are rejected.
    version: u64,
}

/// Per-layer gradients with the same shapes as the parameters.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub d_weights: Vec<Matrix>,
    pub d_bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.d_weights.iter().all(|m| m.is_finite())
            && self
                .d_bias
                .iter()
                .all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Per-layer intermediates from a forward pass, consumed by `backward`.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    version: u64,
    input: Matrix,
    pre_activations: Vec<Matrix>,
    activations: Vec<Matrix>,
}

impl GeneratorParams {
    /// Uniform Glorot initialization (±sqrt(6/(fan_in+fan_out))), biases
    /// zero. Hidden layers use ReLU, the output layer is linear.
    pub fn glorot(input_dim: usize, hidden: &[usize], output_dim: usize, seed: u64) -> Self {
        use rand::Rng;
        let mut rng = stream_rng(seed, 0x1717);
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(output_dim);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            let weights = Matrix::from_vec(fan_in, fan_out, data).expect("sized buffer");
            let activation = if layers.len() + 1 < sizes.len() - 1 {
                Activation::Relu
            } else {
                Activation::Identity
            };
            layers.push(DenseLayer {
                weights,
                bias: vec![0.0; fan_out],
                activation,
            });
        }
        let adam = AdamState::zeros_like(&layers);
        Self {
            layers,
            adam,
            version: 0,
        }
    }

    /// Build from explicit layers (used by tests and fixtures).
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParam("network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(Error::ShapeMismatch(format!(
                    "layer output width {} does not feed layer input width {}",
                    w[0].out_dim(),
                    w[1].in_dim()
                )));
            }
        }
        let adam = AdamState::zeros_like(&layers);
        Ok(Self {
            layers,
            adam,
            version: 0,
        })
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.bias.len())
            .sum()
    }

    pub fn adam_step_count(&self) -> u64 {
        self.adam.step
    }

    pub fn require_finite(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            l.weights
                .require_finite(&format!("weights of layer {i}"))?;
            if !l.bias.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("bias of layer {i}")));
            }
        }
        Ok(())
    }

    /// Forward pass caching per-layer pre-activations for `backward`.
    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if input.cols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input width {} does not match network input width {}",
                input.cols(),
                self.input_dim()
            )));
        }
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut current = input.clone();
        for layer in &self.layers {
            let mut z = current.matmul(&layer.weights)?;
            for i in 0..z.rows() {
                let row = z.row_mut(i);
                for (v, b) in row.iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let mut a = z.clone();
            for v in a.as_mut_slice() {
                *v = layer.activation.apply(*v);
            }
            pre_activations.push(z);
            activations.push(a.clone());
            current = a;
        }
        let cache = ForwardCache {
            version: self.version,
            input: input.clone(),
            pre_activations,
            activations,
        };
        Ok((current, cache))
    }

    /// Forward pass without gradient bookkeeping.
    pub fn output(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input width {} does not match network input width {}",
                input.cols(),
                self.input_dim()
            )));
        }
        let mut current = input.clone();
        for layer in &self.layers {
            let mut z = current.matmul(&layer.weights)?;
            for i in 0..z.rows() {
                let row = z.row_mut(i);
                for (v, b) in row.iter_mut().zip(&layer.bias) {
                    *v = layer.activation.apply(*v + b);
                }
            }
            current = z;
        }
        Ok(current)
    }

    /// Reverse-mode gradients of a scalar loss with output gradient `d_output`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &Matrix) -> Result<Gradients> {
        if cache.version != self.version {
            return Err(Error::StaleCache);
        }
        let last = self.layers.len() - 1;
        let out = &cache.activations[last];
        if d_output.rows() != out.rows() || d_output.cols() != out.cols() {
            return Err(Error::ShapeMismatch(format!(
                "output gradient is {}x{}, expected {}x{}",
                d_output.rows(),
                d_output.cols(),
                out.rows(),
                out.cols()
            )));
        }
        let mut d_weights = vec![Matrix::zeros(0, 0); self.layers.len()];
        let mut d_bias = vec![Vec::new(); self.layers.len()];
        let mut d_act = d_output.clone();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            // dZ = dA ⊙ act'(Z)
            let mut d_z = d_act;
            {
                let z = &cache.pre_activations[l];
                let dz = d_z.as_mut_slice();
                for (v, &zv) in dz.iter_mut().zip(z.as_slice()) {
                    *v *= layer.activation.derivative(zv);
                }
            }
            let below = if l == 0 {
                &cache.input
            } else {
                &cache.activations[l - 1]
            };
            d_weights[l] = below.transpose().matmul(&d_z)?;
            let mut db = vec![0.0; layer.out_dim()];
            for i in 0..d_z.rows() {
                for (acc, &v) in db.iter_mut().zip(d_z.row(i)) {
                    *acc += v;
                }
            }
            d_bias[l] = db;
            d_act = d_z.matmul(&layer.weights.transpose())?;
        }
        Ok(Gradients { d_weights, d_bias })
    }

    /// Standard Adam update with bias correction.
    pub fn adam_step(&mut self, grads: &Gradients, hyper: &AdamHyper) -> Result<()> {
        if grads.d_weights.len() != self.layers.len() || grads.d_bias.len() != self.layers.len() {
            return Err(Error::ShapeMismatch(
                "gradient layer count does not match network".into(),
            ));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let gw = &grads.d_weights[l];
            if gw.rows() != layer.weights.rows() || gw.cols() != layer.weights.cols() {
                return Err(Error::ShapeMismatch(format!(
                    "weight gradient shape mismatch in layer {l}"
                )));
            }
            if grads.d_bias[l].len() != layer.bias.len() {
                return Err(Error::ShapeMismatch(format!(
                    "bias gradient shape mismatch in layer {l}"
                )));
            }
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradients passed to adam_step".into()));
        }
        self.adam.step += 1;
        let t = self.adam.step as f64;
        let bc1 = 1.0 - hyper.beta1.powf(t);
        let bc2 = 1.0 - hyper.beta2.powf(t);
        for l in 0..self.layers.len() {
            let gw = grads.d_weights[l].as_slice();
            let mw = self.adam.m_weights[l].as_mut_slice();
            let vw = self.adam.v_weights[l].as_mut_slice();
            let w = self.layers[l].weights.as_mut_slice();
            for i in 0..gw.len() {
                let g = gw[i];
                mw[i] = hyper.beta1 * mw[i] + (1.0 - hyper.beta1) * g;
                vw[i] = hyper.beta2 * vw[i] + (1.0 - hyper.beta2) * g * g;
                let m_hat = mw[i] / bc1;
                let v_hat = vw[i] / bc2;
                w[i] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.epsilon);
            }
            let gb = &grads.d_bias[l];
            let mb = &mut self.adam.m_bias[l];
            let vb = &mut self.adam.v_bias[l];
            let b = &mut self.layers[l].bias;
            for i in 0..gb.len() {
                let g = gb[i];
                mb[i] = hyper.beta1 * mb[i] + (1.0 - hyper.beta1) * g;
                vb[i] = hyper.beta2 * vb[i] + (1.0 - hyper.beta2) * g * g;
                let m_hat = mb[i] / bc1;
                let v_hat = vb[i] / bc2;
                b[i] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.epsilon);
            }
        }
        self.version += 1;
        self.require_finite()
    }
}
