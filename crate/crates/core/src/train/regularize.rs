//! Quadratic orthology penalty for soft-mode conversion weights:
//! `alpha * sum_{B_ij = 0} w_ij^2 + beta * sum_{B_ij = 1} w_ij^2`.
//!
//! Weights are accepted either dense (`n_t * n_s`, row-major) or support-only
//! (one per edge, in edge order). The two layouts only share a length when
//! every pair is an edge, and then they coincide.

use crate::error::{Error, Result};
use crate::graph::BiadjacencyMatrix;

/// On-support flag for each weight in the layout implied by `weights.len()`.
fn support_flags(
    weights: &[f64],
    mask: &BiadjacencyMatrix,
    alpha: f64,
    beta: f64,
) -> Result<Vec<bool>> {
    if !(alpha.is_finite() && alpha >= 0.0 && beta.is_finite() && beta >= 0.0) {
        return Err(Error::invalid(format!(
            "regularization strengths must be finite and >= 0 (alpha {alpha}, beta {beta})"
        )));
    }
    let dense = mask.n_targets() * mask.n_sources();
    if weights.len() == dense {
        Ok(mask.to_dense().into_iter().map(|b| b == 1).collect())
    } else if weights.len() == mask.edge_count() {
        Ok(vec![true; weights.len()])
    } else {
        Err(Error::invalid(format!(
            "{} weights match neither the dense shape ({dense}) nor the edge count ({})",
            weights.len(),
            mask.edge_count()
        )))
    }
}

pub fn regularization_penalty(
    weights: &[f64],
    mask: &BiadjacencyMatrix,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let flags = support_flags(weights, mask, alpha, beta)?;
    let (mut off, mut on) = (0.0, 0.0);
    for (&w, on_support) in weights.iter().zip(flags) {
        if on_support {
            on += w * w;
        } else {
            off += w * w;
        }
    }
    Ok(alpha * off + beta * on)
}

/// Gradient of [`regularization_penalty`], same layout as `weights`.
pub fn regularization_grad(
    weights: &[f64],
    mask: &BiadjacencyMatrix,
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; weights.len()];
    add_regularization_grad(weights, mask, alpha, beta, &mut grad)?;
    Ok(grad)
}

pub(crate) fn add_regularization_grad(
    weights: &[f64],
    mask: &BiadjacencyMatrix,
    alpha: f64,
    beta: f64,
    grad: &mut [f64],
) -> Result<()> {
    let flags = support_flags(weights, mask, alpha, beta)?;
    for ((g, &w), on_support) in grad.iter_mut().zip(weights).zip(flags) {
        let c = if on_support { beta } else { alpha };
        *g += 2.0 * c * w;
    }
    Ok(())
}
