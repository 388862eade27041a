//! The species conversion layer: a bias-free linear map from source-gene
//! expression to target-gene expression whose weights are tied to the
//! orthology graph.
//!
//! In [`Mode::Hard`] only weights on graph edges exist, stored in the graph's
//! compressed-row order, and the output is `x_t[i] = sum_{(i,j) in edges} w_ij * x_s[j]`.
//! In [`Mode::Soft`] the layer holds a dense `n_t x n_s` matrix and applies it
//! unmasked; the graph only enters through the regularizer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BiadjacencyMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hard,
    Soft,
}

/// Starting values for on-support weights. Off-support soft weights always start at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// `1 / deg(i)` on every edge of row `i`: an ortholog-averaging map.
    #[default]
    RowUniform,
    /// Uniform in `±1/sqrt(deg(i))` from the supplied generator.
    ScaledRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedLinearLayer {
    mask: BiadjacencyMatrix,
    mode: Mode,
    weights: Vec<f64>,
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "{what} contains a non-finite value"
        )));
    }
    Ok(())
}

impl MaskedLinearLayer {
    /// Hard-masked layer with one weight per edge, in edge order.
    pub fn hard(mask: BiadjacencyMatrix, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != mask.edge_count() {
            return Err(Error::invalid(format!(
                "hard layer needs {} weights, got {}",
                mask.edge_count(),
                weights.len()
            )));
        }
        check_finite(&weights, "conversion weights")?;
        Ok(Self {
            mask,
            mode: Mode::Hard,
            weights,
        })
    }

    /// Soft layer from a dense row-major `n_t x n_s` matrix.
    pub fn soft(mask: BiadjacencyMatrix, dense: Vec<f64>) -> Result<Self> {
        let n = mask.n_targets() * mask.n_sources();
        if dense.len() != n {
            return Err(Error::invalid(format!(
                "soft layer needs {n} weights, got {}",
                dense.len()
            )));
        }
        check_finite(&dense, "conversion weights")?;
        Ok(Self {
            mask,
            mode: Mode::Soft,
            weights: dense,
        })
    }

    pub fn initialized<R: Rng>(
        mask: BiadjacencyMatrix,
        mode: Mode,
        init: Init,
        rng: &mut R,
    ) -> Self {
        let mut on_support = Vec::with_capacity(mask.edge_count());
        for i in 0..mask.n_targets() {
            let deg = mask.degree(i) as f64;
            for _ in mask.row_range(i) {
                on_support.push(match init {
                    Init::RowUniform => 1.0 / deg,
                    Init::ScaledRandom => {
                        let bound = 1.0 / deg.sqrt();
                        rng.gen_range(-bound..=bound)
                    }
                });
            }
        }
        let weights = match mode {
            Mode::Hard => on_support,
            Mode::Soft => {
                let n_s = mask.n_sources();
                let mut dense = vec![0.0; mask.n_targets() * n_s];
                for (&(i, j), w) in mask.edges().iter().zip(on_support) {
                    dense[i * n_s + j] = w;
                }
                dense
            }
        };
        Self {
            mask,
            mode,
            weights,
        }
    }

    /// The same map in another storage mode. Hard to soft materializes the
    /// dense matrix; soft to hard keeps only the on-graph weights.
    pub fn with_mode(self, mode: Mode) -> Self {
        if mode == self.mode {
            return self;
        }
        let weights = match mode {
            Mode::Soft => self.to_dense(),
            Mode::Hard => {
                let n_s = self.n_sources();
                self.mask
                    .edges()
                    .iter()
                    .map(|&(i, j)| self.weights[i * n_s + j])
                    .collect()
            }
        };
        Self {
            mask: self.mask,
            mode,
            weights,
        }
    }

    pub fn mask(&self) -> &BiadjacencyMatrix {
        &self.mask
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn n_targets(&self) -> usize {
        self.mask.n_targets()
    }

    pub fn n_sources(&self) -> usize {
        self.mask.n_sources()
    }

    /// Stored weights: per edge in hard mode, dense row-major in soft mode.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Dense `n_t x n_s` materialization; hard mode is exactly zero off the graph.
    pub fn to_dense(&self) -> Vec<f64> {
        match self.mode {
            Mode::Soft => self.weights.clone(),
            Mode::Hard => {
                let n_s = self.n_sources();
                let mut dense = vec![0.0; self.n_targets() * n_s];
                for (&(i, j), &w) in self.mask.edges().iter().zip(&self.weights) {
                    dense[i * n_s + j] = w;
                }
                dense
            }
        }
    }

    /// `(target index, source index, weight)` for every stored weight.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n_s = self.n_sources().max(1);
        let hard = self.mode == Mode::Hard;
        self.weights.iter().enumerate().map(move |(k, &w)| {
            if hard {
                let (i, j) = self.mask.edges()[k];
                (i, j, w)
            } else {
                (k / n_s, k % n_s, w)
            }
        })
    }

    pub fn forward(&self, x_s: &[f64]) -> Result<Vec<f64>> {
        if x_s.len() != self.n_sources() {
            return Err(Error::invalid(format!(
                "conversion input has length {}, expected {}",
                x_s.len(),
                self.n_sources()
            )));
        }
        let (n_t, n_s) = (self.n_targets(), self.n_sources());
        let mut x_t = vec![0.0; n_t];
        match self.mode {
            Mode::Hard => {
                let edges = self.mask.edges();
                for (i, out) in x_t.iter_mut().enumerate() {
                    *out = self
                        .mask
                        .row_range(i)
                        .map(|k| self.weights[k] * x_s[edges[k].1])
                        .sum();
                }
            }
            Mode::Soft => {
                for (row, out) in self.weights.chunks_exact(n_s.max(1)).zip(x_t.iter_mut()) {
                    *out = row.iter().zip(x_s).map(|(w, x)| w * x).sum();
                }
            }
        }
        Ok(x_t)
    }

    /// Gradients of a downstream loss given `upstream = dL/dx_t`.
    ///
    /// Returns `(dL/dweights, dL/dx_s)`; the weight gradient has the same
    /// layout as [`weights`](Self::weights).
    pub fn backward(&self, x_s: &[f64], upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut grad_w = vec![0.0; self.weights.len()];
        let grad_x = self.accumulate_backward(x_s, upstream, &mut grad_w)?;
        Ok((grad_w, grad_x))
    }

    /// As [`backward`](Self::backward), adding the weight gradient into `grad_w`.
    pub fn accumulate_backward(
        &self,
        x_s: &[f64],
        upstream: &[f64],
        grad_w: &mut [f64],
    ) -> Result<Vec<f64>> {
        let (n_t, n_s) = (self.n_targets(), self.n_sources());
        if x_s.len() != n_s || upstream.len() != n_t || grad_w.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "conversion backward: got input {}, upstream {}, gradient buffer {}; \
                 expected {n_s}, {n_t}, {}",
                x_s.len(),
                upstream.len(),
                grad_w.len(),
                self.weights.len()
            )));
        }
        let mut grad_x = vec![0.0; n_s];
        match self.mode {
            Mode::Hard => {
                for (k, &(i, j)) in self.mask.edges().iter().enumerate() {
                    grad_w[k] += upstream[i] * x_s[j];
                    grad_x[j] += self.weights[k] * upstream[i];
                }
            }
            Mode::Soft => {
                for (i, &u) in upstream.iter().enumerate().take(n_t) {
                    let row = i * n_s;
                    for j in 0..n_s {
                        grad_w[row + j] += u * x_s[j];
                        grad_x[j] += self.weights[row + j] * u;
                    }
                }
            }
        }
        Ok(grad_x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|k| format!("{prefix}{k}")).collect()
    }

    fn graph(n_t: usize, n_s: usize, edges: Vec<(usize, usize)>) -> BiadjacencyMatrix {
        BiadjacencyMatrix::new(ids("t", n_t), ids("s", n_s), edges).unwrap()
    }

    #[test]
    fn identity_mapping() {
        let layer =
            MaskedLinearLayer::hard(graph(3, 3, vec![(0, 0), (1, 1), (2, 2)]), vec![1.0; 3])
                .unwrap();
        assert_eq!(
            layer.forward(&[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn empty_mask_gives_zero() {
        let layer = MaskedLinearLayer::hard(graph(2, 3, vec![]), vec![]).unwrap();
        assert_eq!(layer.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn element_wise_sum() {
        let layer =
            MaskedLinearLayer::hard(graph(1, 2, vec![(0, 0), (0, 1)]), vec![0.5, 2.0]).unwrap();
        assert_eq!(layer.forward(&[4.0, 1.0]).unwrap(), vec![4.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let layer = MaskedLinearLayer::hard(graph(1, 2, vec![(0, 0)]), vec![1.0]).unwrap();
        assert!(layer.forward(&[1.0]).is_err());
        assert!(layer.backward(&[1.0, 2.0], &[1.0, 1.0]).is_err());
        assert!(MaskedLinearLayer::hard(graph(1, 2, vec![(0, 0)]), vec![1.0, 2.0]).is_err());
        assert!(MaskedLinearLayer::soft(graph(1, 2, vec![(0, 0)]), vec![1.0]).is_err());
        assert!(MaskedLinearLayer::hard(graph(1, 2, vec![(0, 0)]), vec![f64::NAN]).is_err());
    }

    #[test]
    fn backward_examples() {
        let layer = MaskedLinearLayer::hard(graph(1, 2, vec![(0, 0)]), vec![0.7]).unwrap();
        let (gw, gx) = layer.backward(&[4.0, 1.0], &[0.0]).unwrap();
        assert_eq!((gw, gx), (vec![0.0], vec![0.0, 0.0]));
        let (gw, gx) = layer.backward(&[4.0, 1.0], &[1.0]).unwrap();
        assert_eq!(gw, vec![4.0]);
        assert_eq!(gx, vec![0.7, 0.0]);

        let soft = MaskedLinearLayer::soft(graph(1, 2, vec![(0, 0)]), vec![0.1, -0.2]).unwrap();
        let (gw, gx) = soft.backward(&[3.0, 5.0], &[2.0]).unwrap();
        assert_eq!(gw, vec![6.0, 10.0]);
        assert_eq!(gx, vec![0.2, -0.4]);
    }

    #[test]
    fn soft_forward_ignores_mask() {
        let soft = MaskedLinearLayer::soft(graph(1, 2, vec![(0, 0)]), vec![1.0, 3.0]).unwrap();
        assert_eq!(soft.forward(&[1.0, 1.0]).unwrap(), vec![4.0]);
    }

    #[test]
    fn initialization() {
        let g = graph(3, 4, vec![(0, 0), (0, 2), (1, 1), (1, 2), (1, 3)]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hard =
            MaskedLinearLayer::initialized(g.clone(), Mode::Hard, Init::RowUniform, &mut rng);
        assert_eq!(hard.weights(), &[0.5, 0.5, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);

        let soft =
            MaskedLinearLayer::initialized(g.clone(), Mode::Soft, Init::RowUniform, &mut rng);
        assert_eq!(soft.to_dense(), hard.to_dense());

        let random = MaskedLinearLayer::initialized(g, Mode::Hard, Init::ScaledRandom, &mut rng);
        for ((i, _, w), bound) in
            random
                .entries()
                .zip([0.5f64, 0.5, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])
        {
            assert!(w.abs() <= bound.sqrt(), "row {i}: {w}");
        }
    }

    #[test]
    fn mode_conversion() {
        let g = graph(2, 2, vec![(0, 1), (1, 0)]);
        let hard = MaskedLinearLayer::hard(g, vec![2.0, 3.0]).unwrap();
        let soft = hard.clone().with_mode(Mode::Soft);
        assert_eq!(soft.weights(), &[0.0, 2.0, 3.0, 0.0]);
        assert_eq!(
            soft.forward(&[1.0, 5.0]).unwrap(),
            hard.forward(&[1.0, 5.0]).unwrap()
        );
        assert_eq!(soft.with_mode(Mode::Hard), hard);
    }

    #[test]
    fn entries_layout() {
        let g = graph(2, 2, vec![(1, 0)]);
        let soft = MaskedLinearLayer::soft(g.clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let e: Vec<_> = soft.entries().collect();
        assert_eq!(e[2], (1, 0, 3.0));
        let hard = MaskedLinearLayer::hard(g, vec![9.0]).unwrap();
        assert_eq!(hard.entries().collect::<Vec<_>>(), vec![(1, 0, 9.0)]);
    }
}
