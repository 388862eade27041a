//! Phenotype losses. Each returns the value and its gradient with respect to
//! the prediction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    #[serde(rename = "mse")]
    Mse,
    #[serde(rename = "ce")]
    CrossEntropy,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::CrossEntropy => "ce",
        }
    }
}

/// A single sample's phenotype.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Value(f64),
    Class(usize),
}

/// Mean squared error over the components.
pub fn loss_mse(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::invalid(format!(
            "mse: prediction length {} vs target length {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("mse of empty vectors"));
    }
    let dim = pred.len() as f64;
    let mut value = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            value += d * d;
            2.0 * d / dim
        })
        .collect();
    Ok((value / dim, grad))
}

/// Softmax cross-entropy of `logits` against `class_index`, with max subtraction.
pub fn loss_cross_entropy(logits: &[f64], class_index: usize) -> Result<(f64, Vec<f64>)> {
    if class_index >= logits.len() {
        return Err(Error::invalid(format!(
            "class index {class_index} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let value = sum.ln() - (logits[class_index] - max);
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[class_index] -= 1.0;
    Ok((value, grad))
}

pub fn loss(kind: LossKind, pred: &[f64], target: Target) -> Result<(f64, Vec<f64>)> {
    match (kind, target) {
        (LossKind::Mse, Target::Value(y)) => loss_mse(pred, &[y]),
        (LossKind::CrossEntropy, Target::Class(c)) => loss_cross_entropy(pred, c),
        (kind, target) => Err(Error::invalid(format!(
            "{} loss cannot score target {target:?}",
            kind.name()
        ))),
    }
}
