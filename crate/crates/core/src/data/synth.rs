//! Seeded synthetic transfer task with a known generating conversion.
//!
//! Every draw comes from one `ChaCha8Rng` stream seeded with `SyntheticSpec::seed`,
//! consumed in a fixed order:
//!
//! 1. orthology edges, row by row: each `(i, j)` kept with probability
//!    `orthology_density`; a row left empty gets one uniformly chosen source;
//! 2. true conversion weights on the edges, uniform in `[-1, 1]`;
//! 3. the frozen network: hidden ReLU layer, then a linear head to one output;
//! 4. source expression, standard normal;
//! 5. label noise, normal with standard deviation `noise_sigma`;
//! 6. the train/test shuffle (one fifth of the samples, rounded up, are test).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ExpressionDataset, Labels};
use crate::error::{Error, Result};
use crate::graph::BiadjacencyMatrix;
use crate::layer::MaskedLinearLayer;
use crate::loss::LossKind;
use crate::mlp::{Activation, DenseLayer, FeedforwardNetwork};
use crate::model::Model;
use crate::train::evaluate;
use crate::tsv::{fmt_f64, write_gene_list};

pub const TARGET_SPECIES: &str = "target";
pub const SOURCE_SPECIES: &str = "source";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n_s: usize,
    pub n_t: usize,
    pub orthology_density: f64,
    pub num_samples: usize,
    pub noise_sigma: f64,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_s == 0 || self.n_t == 0 || self.hidden_dim == 0 {
            return Err(Error::invalid("n_s, n_t and hidden_dim must be positive"));
        }
        if !(self.orthology_density > 0.0 && self.orthology_density <= 1.0) {
            return Err(Error::invalid(format!(
                "orthology density must be in (0, 1], got {}",
                self.orthology_density
            )));
        }
        if self.num_samples < 2 {
            return Err(Error::invalid(
                "need at least 2 samples for a train/test split",
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBundle {
    pub graph: BiadjacencyMatrix,
    /// Hard-mode layer holding the generating weights.
    pub true_conversion: MaskedLinearLayer,
    pub frozen_net: FeedforwardNetwork,
    pub train: ExpressionDataset,
    pub test: ExpressionDataset,
    /// Test loss of the generating parameters.
    pub oracle_loss: f64,
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticBundle> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let target_ids = ids("t", spec.n_t);
    let source_ids = ids("s", spec.n_s);

    let mut edges = Vec::new();
    for i in 0..spec.n_t {
        let before = edges.len();
        for j in 0..spec.n_s {
            if rng.gen::<f64>() < spec.orthology_density {
                edges.push((i, j));
            }
        }
        if edges.len() == before {
            edges.push((i, rng.gen_range(0..spec.n_s)));
        }
    }
    let graph = BiadjacencyMatrix::new(target_ids.clone(), source_ids.clone(), edges)?;

    let true_weights = uniform_vec(&mut rng, graph.edge_count(), 1.0);
    let true_conversion = MaskedLinearLayer::hard(graph.clone(), true_weights)?;

    let h = spec.hidden_dim;
    let hidden_bound = (6.0 / (spec.n_t + h) as f64).sqrt();
    let hidden = DenseLayer::new(
        h,
        spec.n_t,
        uniform_vec(&mut rng, h * spec.n_t, hidden_bound),
        uniform_vec(&mut rng, h, 0.1),
        Activation::Relu,
    )?;
    let head_bound = (6.0 / (h + 1) as f64).sqrt();
    let head = DenseLayer::new(
        1,
        h,
        uniform_vec(&mut rng, h, head_bound),
        uniform_vec(&mut rng, 1, 0.1),
        Activation::Identity,
    )?;
    let frozen_net = FeedforwardNetwork::new(vec![hidden, head])?.frozen();

    let n = spec.num_samples;
    let values: Vec<f64> = (0..n * spec.n_s)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let x_s = &values[k * spec.n_s..(k + 1) * spec.n_s];
        let clean = frozen_net.predict(&true_conversion.forward(x_s)?)?[0];
        let noise: f64 = rng.sample(StandardNormal);
        labels.push(clean + spec.noise_sigma * noise);
    }
    let all = ExpressionDataset::new(SOURCE_SPECIES, source_ids, ids("sample", n), values)?
        .with_labels(Labels::Regression(labels))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_test = n.div_ceil(5);
    let test = all.select_samples(&order[..n_test]);
    let train = all.select_samples(&order[n_test..]);

    let oracle_loss = evaluate(&frozen_net, &true_conversion, &test)?;
    Ok(SyntheticBundle {
        graph,
        true_conversion,
        frozen_net,
        train,
        test,
        oracle_loss,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

impl SyntheticBundle {
    /// Model document with the frozen network and no conversion layer.
    pub fn base_model(&self) -> Model {
        let mut model = Model::new(self.frozen_net.clone(), LossKind::Mse);
        model.input_gene_ids = Some(self.graph.target_gene_ids().to_vec());
        model
    }

    /// Model document with the frozen network behind the generating conversion.
    pub fn oracle_model(&self) -> Model {
        let mut model = self.base_model();
        model.conversion = Some(self.true_conversion.clone());
        model
    }

    /// Writes every artifact of the bundle into `dir`:
    /// gene lists, graph, train/test expression and labels, the base and
    /// oracle models, and the oracle loss.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let flush = |name: &str, f: &dyn Fn(&mut dyn Write) -> Result<()>| -> Result<()> {
            let mut w = create(dir, name)?;
            f(&mut w)?;
            w.flush()?;
            Ok(())
        };
        flush("target_genes.tsv", &|w| {
            write_gene_list(self.graph.target_gene_ids(), w)
        })?;
        flush("source_genes.tsv", &|w| {
            write_gene_list(self.graph.source_gene_ids(), w)
        })?;
        flush("graph.tsv", &|w| self.graph.write_tsv(w))?;
        for (prefix, data) in [("train", &self.train), ("test", &self.test)] {
            flush(&format!("{prefix}_expr.tsv"), &|w| data.write_tsv(w))?;
            let table = data.phenotype_table().expect("synthetic data is labelled");
            flush(&format!("{prefix}_labels.tsv"), &|w| table.write_tsv(w))?;
        }
        flush("base_model.json", &|w| self.base_model().write(w))?;
        flush("oracle_model.json", &|w| self.oracle_model().write(w))?;
        flush("oracle_loss.txt", &|w| {
            Ok(writeln!(w, "{}", fmt_f64(self.oracle_loss))?)
        })?;
        Ok(())
    }
}
