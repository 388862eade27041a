//! Two training phases: fitting the phenotype network on its own species, and
//! fitting only the conversion layer in front of that network once frozen.
//!
//! Runs are fully deterministic: all randomness comes from a ChaCha8 stream
//! seeded with `TrainConfig::seed`, and batch gradients are accumulated in
//! sample order.

mod optim;
mod regularize;

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use optim::OptimizerKind;
pub use regularize::{regularization_grad, regularization_penalty};

use crate::data::ExpressionDataset;
use crate::error::{Error, Result};
use crate::layer::{Init, MaskedLinearLayer, Mode};
use crate::loss::{loss, LossKind};
use crate::mlp::{FeedforwardNetwork, LayerGrads};
use crate::tsv::fmt_f64;
use optim::Optimizer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub learning_rate: f64,
    pub steps: usize,
    /// Samples per step; anything at or above the dataset size means full batch.
    pub batch_size: usize,
    /// Penalty on off-graph weights (soft mode only).
    pub alpha: f64,
    /// Penalty on on-graph weights (soft mode only).
    pub beta: f64,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub init: Init,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Hard,
            learning_rate: 0.01,
            steps: 2000,
            batch_size: usize::MAX,
            alpha: 1.0,
            beta: 0.0,
            loss: LossKind::Mse,
            optimizer: OptimizerKind::ADAM,
            seed: 0,
            init: Init::RowUniform,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if let OptimizerKind::Adam {
            beta1,
            beta2,
            epsilon,
        } = self.optimizer
        {
            let ok = (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && epsilon > 0.0;
            if !ok {
                return Err(Error::invalid(
                    "adam needs beta1, beta2 in [0, 1) and epsilon > 0",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Training objective of each step's batch, measured before that step's update.
    pub losses: Vec<f64>,
    /// Mean phenotype loss over the full training set after the last step.
    pub final_eval: f64,
    pub wall_time_secs: f64,
    pub seed: u64,
}

impl TrainReport {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step\tloss")?;
        for (k, l) in self.losses.iter().enumerate() {
            writeln!(out, "{}\t{}", k + 1, fmt_f64(*l))?;
        }
        writeln!(out, "# final_eval\t{}", fmt_f64(self.final_eval))?;
        Ok(())
    }
}

/// Yields the sample indices of each step. Full batches keep dataset order;
/// otherwise the order is reshuffled at the start of every epoch.
struct Batcher {
    order: Vec<usize>,
    batch_size: usize,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl Batcher {
    fn new(n: usize, batch_size: usize, seed: u64) -> Self {
        Self {
            order: (0..n).collect(),
            batch_size: batch_size.min(n),
            cursor: n,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn next_batch(&mut self) -> &[usize] {
        let n = self.order.len();
        if self.batch_size == n {
            return &self.order;
        }
        if self.cursor >= n {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let end = (self.cursor + self.batch_size).min(n);
        let batch = &self.order[self.cursor..end];
        self.cursor = end;
        batch
    }
}

fn check_labels(data: &ExpressionDataset, kind: LossKind, what: &str) -> Result<()> {
    let labels = data.require_labels(what)?;
    if labels.loss_kind() != kind {
        return Err(Error::invalid(format!(
            "{what}: {} loss configured but labels are for {}",
            kind.name(),
            labels.loss_kind().name()
        )));
    }
    if data.n_samples() == 0 {
        return Err(Error::invalid(format!("{what}: dataset has no samples")));
    }
    Ok(())
}

fn finite(value: f64, step: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numerical(format!(
            "training loss became {value} at step {step}"
        )))
    }
}

/// Training objective of the conversion layer on samples `batch` and its
/// gradient with respect to the stored weights.
///
/// The objective is the mean phenotype loss of `net(layer(x_s))`, plus the
/// orthology penalty `regularization_penalty(weights, mask, alpha, beta)` when
/// the layer is in soft mode.
pub fn conversion_objective(
    layer: &MaskedLinearLayer,
    net: &FeedforwardNetwork,
    data: &ExpressionDataset,
    batch: &[usize],
    alpha: f64,
    beta: f64,
) -> Result<(f64, Vec<f64>)> {
    let labels = data.require_labels("conversion objective")?;
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let kind = labels.loss_kind();
    let mut grad = vec![0.0; layer.weights().len()];
    let mut total = 0.0;
    for &k in batch {
        let x_s = data.row(k);
        let x_t = layer.forward(x_s)?;
        let (y, cache) = net.forward(&x_t)?;
        let (l, dl_dy) = loss(kind, &y, labels.target(k))?;
        total += l;
        let dl_dxt = net.backward_input(&cache, &dl_dy)?;
        layer.accumulate_backward(x_s, &dl_dxt, &mut grad)?;
    }
    let scale = 1.0 / batch.len() as f64;
    for g in &mut grad {
        *g *= scale;
    }
    let mut objective = total * scale;
    if layer.mode() == Mode::Soft {
        objective += regularization_penalty(layer.weights(), layer.mask(), alpha, beta)?;
        regularize::add_regularization_grad(layer.weights(), layer.mask(), alpha, beta, &mut grad)?;
    }
    Ok((objective, grad))
}

/// Trains only the conversion weights in front of a frozen phenotype network.
pub fn train_conversion(
    mut layer: MaskedLinearLayer,
    frozen_net: &FeedforwardNetwork,
    data: &ExpressionDataset,
    cfg: &TrainConfig,
) -> Result<(MaskedLinearLayer, TrainReport)> {
    cfg.validate()?;
    if !frozen_net.is_frozen() {
        return Err(Error::InvalidState(
            "conversion training requires a frozen phenotype network".into(),
        ));
    }
    if cfg.mode != layer.mode() {
        return Err(Error::invalid(format!(
            "config mode {:?} does not match layer mode {:?}",
            cfg.mode,
            layer.mode()
        )));
    }
    if data.n_genes() != layer.n_sources() {
        return Err(Error::invalid(format!(
            "dataset has {} genes, conversion layer expects {}",
            data.n_genes(),
            layer.n_sources()
        )));
    }
    if frozen_net.input_dim() != layer.n_targets() {
        return Err(Error::invalid(format!(
            "conversion produces {} genes, network expects {}",
            layer.n_targets(),
            frozen_net.input_dim()
        )));
    }
    check_labels(data, cfg.loss, "conversion training")?;

    let start = Instant::now();
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate);
    let mut batcher = Batcher::new(data.n_samples(), cfg.batch_size, cfg.seed);
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let batch = batcher.next_batch();
        let (objective, grad) =
            conversion_objective(&layer, frozen_net, data, batch, cfg.alpha, cfg.beta)?;
        losses.push(finite(objective, step)?);
        optimizer.begin_step();
        optimizer.update(0, layer.weights_mut(), &grad);
    }
    let final_eval = finite(evaluate(frozen_net, &layer, data)?, cfg.steps)?;
    let report = TrainReport {
        losses,
        final_eval,
        wall_time_secs: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
    };
    Ok((layer, report))
}

/// Builds a layer from `mask` using the config's mode and initialization
/// (seeded from `cfg.seed`) and trains it.
pub fn fit_conversion(
    mask: crate::graph::BiadjacencyMatrix,
    frozen_net: &FeedforwardNetwork,
    data: &ExpressionDataset,
    cfg: &TrainConfig,
) -> Result<(MaskedLinearLayer, TrainReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let layer = MaskedLinearLayer::initialized(mask, cfg.mode, cfg.init, &mut rng);
    train_conversion(layer, frozen_net, data, cfg)
}

/// Trains every parameter of an unfrozen network on its own species' data.
pub fn train_base(
    mut net: FeedforwardNetwork,
    data: &ExpressionDataset,
    cfg: &TrainConfig,
) -> Result<(FeedforwardNetwork, TrainReport)> {
    cfg.validate()?;
    if net.is_frozen() {
        return Err(Error::InvalidState("cannot train a frozen network".into()));
    }
    if data.n_genes() != net.input_dim() {
        return Err(Error::invalid(format!(
            "dataset has {} genes, network expects {}",
            data.n_genes(),
            net.input_dim()
        )));
    }
    check_labels(data, cfg.loss, "base training")?;
    let labels = data.require_labels("base training")?;

    let start = Instant::now();
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate);
    let mut batcher = Batcher::new(data.n_samples(), cfg.batch_size, cfg.seed);
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let batch = batcher.next_batch();
        let mut grads: Vec<LayerGrads> = net
            .layers()
            .iter()
            .map(|l| LayerGrads {
                weights: vec![0.0; l.weights().len()],
                bias: vec![0.0; l.bias().len()],
            })
            .collect();
        let mut total = 0.0;
        for &k in batch {
            let (y, cache) = net.forward(data.row(k))?;
            let (l, dl_dy) = loss(cfg.loss, &y, labels.target(k))?;
            total += l;
            net.backprop(&cache, &dl_dy, Some(&mut grads))?;
        }
        let scale = 1.0 / batch.len() as f64;
        losses.push(finite(total * scale, step)?);
        optimizer.begin_step();
        for (k, (layer, g)) in net.layers_mut().iter_mut().zip(&mut grads).enumerate() {
            g.weights
                .iter_mut()
                .chain(g.bias.iter_mut())
                .for_each(|v| *v *= scale);
            let (w, b) = layer.params_mut();
            optimizer.update(2 * k, w, &g.weights);
            optimizer.update(2 * k + 1, b, &g.bias);
        }
    }
    let final_eval = finite(evaluate_network(&net, data)?, cfg.steps)?;
    let report = TrainReport {
        losses,
        final_eval,
        wall_time_secs: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
    };
    Ok((net, report))
}

fn mean_loss(
    data: &ExpressionDataset,
    mut predict: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<f64> {
    let labels = data.require_labels("evaluation")?;
    if data.n_samples() == 0 {
        return Err(Error::invalid("cannot evaluate on an empty dataset"));
    }
    let kind = labels.loss_kind();
    let mut total = 0.0;
    for k in 0..data.n_samples() {
        let y = predict(data.row(k))?;
        total += loss(kind, &y, labels.target(k))?.0;
    }
    Ok(total / data.n_samples() as f64)
}

/// Mean phenotype loss of `net(layer(x_s))` over the dataset; the loss kind
/// follows the label type.
pub fn evaluate(
    net: &FeedforwardNetwork,
    layer: &MaskedLinearLayer,
    data: &ExpressionDataset,
) -> Result<f64> {
    mean_loss(data, |x| net.predict(&layer.forward(x)?))
}

/// Mean phenotype loss of the network alone.
pub fn evaluate_network(net: &FeedforwardNetwork, data: &ExpressionDataset) -> Result<f64> {
    mean_loss(data, |x| net.predict(x))
}
