//! Fully connected feedforward network with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

/// Affine map followed by an activation. `weights` is `rows x cols`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(
        rows: usize,
        cols: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "layer shape {rows}x{cols} has a zero dimension"
            )));
        }
        if weights.len() != rows * cols {
            return Err(Error::invalid(format!(
                "layer {rows}x{cols} given {} weights",
                weights.len()
            )));
        }
        if bias.len() != rows {
            return Err(Error::invalid(format!(
                "layer with {rows} outputs given {} biases",
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::invalid("layer parameters must be finite"));
        }
        Ok(Self {
            rows,
            cols,
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(rows: usize, cols: usize, activation: Activation) -> Result<Self> {
        Self::new(
            rows,
            cols,
            vec![0.0; rows * cols],
            vec![0.0; rows],
            activation,
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.bias)
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.cols)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Activations retained by [`FeedforwardNetwork::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().map_or(&self.input, Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedforwardNetwork {
    layers: Vec<DenseLayer>,
    frozen: bool,
}

impl FeedforwardNetwork {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[1].cols != pair[0].rows {
                return Err(Error::invalid(format!(
                    "layer {} takes {} inputs but layer {k} produces {}",
                    k + 1,
                    pair[1].cols,
                    pair[0].rows
                )));
            }
        }
        Ok(Self {
            layers,
            frozen: false,
        })
    }

    /// Glorot-uniform weights and zero biases; `dims` lists every layer width
    /// from input to output, `activations` one entry per layer.
    pub fn random<R: Rng>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if dims.len() != activations.len() + 1 {
            return Err(Error::invalid(format!(
                "{} widths need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(d, &act)| {
                let (cols, rows) = (d[0], d[1]);
                let bound = (6.0 / (rows + cols) as f64).sqrt();
                let weights = (0..rows * cols)
                    .map(|_| rng.gen_range(-bound..=bound))
                    .collect();
                DenseLayer::new(rows, cols, weights, vec![0.0; rows], act)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "network input has length {}, expected {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Output only, without keeping intermediate activations.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer
                .affine(&a)
                .into_iter()
                .map(|z| layer.activation.apply(z))
                .collect();
        }
        Ok(a)
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(x)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = post.last().map_or(x, Vec::as_slice);
            let z = layer.affine(input);
            let a = z.iter().map(|&z| layer.activation.apply(z)).collect();
            pre.push(z);
            post.push(a);
        }
        let cache = ForwardCache {
            input: x.to_vec(),
            pre,
            post,
        };
        Ok((cache.output().to_vec(), cache))
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        let consistent = cache.input.len() == self.input_dim()
            && cache.pre.len() == self.layers.len()
            && cache.post.len() == self.layers.len()
            && self
                .layers
                .iter()
                .zip(cache.pre.iter().zip(&cache.post))
                .all(|(l, (z, a))| z.len() == l.rows && a.len() == l.rows);
        if !consistent {
            return Err(Error::invalid("forward cache does not match this network"));
        }
        Ok(())
    }

    /// Gradient with respect to the network input only. Parameter gradients
    /// are skipped, which is all a frozen head needs.
    pub fn backward_input(&self, cache: &ForwardCache, dl_dy: &[f64]) -> Result<Vec<f64>> {
        self.backprop(cache, dl_dy, None)
    }

    /// Parameter gradients for every layer plus the gradient with respect to
    /// the input. Gradients are produced even for a frozen network; callers
    /// must not apply them.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        dl_dy: &[f64],
    ) -> Result<(Vec<LayerGrads>, Vec<f64>)> {
        let mut grads: Vec<LayerGrads> = self
            .layers
            .iter()
            .map(|l| LayerGrads {
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.rows],
            })
            .collect();
        let grad_input = self.backprop(cache, dl_dy, Some(&mut grads))?;
        Ok((grads, grad_input))
    }

    /// Shared reverse pass; adds parameter gradients into `grads` when given.
    pub(crate) fn backprop(
        &self,
        cache: &ForwardCache,
        dl_dy: &[f64],
        mut grads: Option<&mut [LayerGrads]>,
    ) -> Result<Vec<f64>> {
        self.check_cache(cache)?;
        if dl_dy.len() != self.output_dim() {
            return Err(Error::invalid(format!(
                "output gradient has length {}, expected {}",
                dl_dy.len(),
                self.output_dim()
            )));
        }
        let mut delta = dl_dy.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let (z, a) = (&cache.pre[k], &cache.post[k]);
            for (d, (&zi, &ai)) in delta.iter_mut().zip(z.iter().zip(a)) {
                *d *= layer.activation.derivative(zi, ai);
            }
            let input = if k == 0 {
                &cache.input
            } else {
                &cache.post[k - 1]
            };
            if let Some(grads) = grads.as_deref_mut() {
                let g = &mut grads[k];
                for (r, &d) in delta.iter().enumerate() {
                    g.bias[r] += d;
                    let row = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
                    for (gw, &x) in row.iter_mut().zip(input) {
                        *gw += d * x;
                    }
                }
            }
            let mut below = vec![0.0; layer.cols];
            for (r, &d) in delta.iter().enumerate() {
                let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                for (b, &w) in below.iter_mut().zip(row) {
                    *b += w * d;
                }
            }
            delta = below;
        }
        Ok(delta)
    }
}
