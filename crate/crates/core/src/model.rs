//! JSON model document holding the phenotype network and, once trained, the
//! conversion layer.
//!
//! Reals are written by `serde_json` with shortest round-trip formatting, so
//! a load/save cycle reproduces every finite `f64` exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BiadjacencyMatrix;
use crate::layer::{MaskedLinearLayer, Mode};
use crate::loss::LossKind;
use crate::mlp::{Activation, DenseLayer, FeedforwardNetwork};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_gene_ids: Option<Vec<String>>,
    loss: LossKind,
    frozen: bool,
    layers: Vec<LayerDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConversionDoc {
    mode: Mode,
    target_gene_ids: Vec<String>,
    source_gene_ids: Vec<String>,
    /// Hard mode: `[target_index, source_index, weight]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<(usize, usize, f64)>>,
    /// Soft mode: orthology graph as `[target_index, source_index]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask: Option<Vec<(usize, usize)>>,
    /// Soft mode: dense row-major weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    network: NetworkDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conversion: Option<ConversionDoc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub network: FeedforwardNetwork,
    pub loss: LossKind,
    /// Gene order expected at the network input, when known.
    pub input_gene_ids: Option<Vec<String>>,
    pub conversion: Option<MaskedLinearLayer>,
}

fn network_doc(
    net: &FeedforwardNetwork,
    loss: LossKind,
    input_gene_ids: Option<Vec<String>>,
) -> NetworkDoc {
    NetworkDoc {
        input_gene_ids,
        loss,
        frozen: net.is_frozen(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerDoc {
                rows: l.rows(),
                cols: l.cols(),
                weights: l.weights().to_vec(),
                bias: l.bias().to_vec(),
                activation: l.activation(),
            })
            .collect(),
    }
}

fn conversion_doc(layer: &MaskedLinearLayer) -> ConversionDoc {
    let mask = layer.mask();
    let (edges, mask_edges, weights) = match layer.mode() {
        Mode::Hard => (Some(layer.entries().collect()), None, None),
        Mode::Soft => (
            None,
            Some(mask.edges().to_vec()),
            Some(layer.weights().to_vec()),
        ),
    };
    ConversionDoc {
        mode: layer.mode(),
        target_gene_ids: mask.target_gene_ids().to_vec(),
        source_gene_ids: mask.source_gene_ids().to_vec(),
        edges,
        mask: mask_edges,
        weights,
    }
}

fn conversion_from_doc(doc: ConversionDoc) -> Result<MaskedLinearLayer> {
    match doc.mode {
        Mode::Hard => {
            if doc.mask.is_some() || doc.weights.is_some() {
                return Err(Error::invalid("hard conversion takes `edges` only"));
            }
            let triples = doc
                .edges
                .ok_or_else(|| Error::invalid("hard conversion is missing `edges`"))?;
            let (pairs, weights): (Vec<_>, Vec<_>) =
                triples.into_iter().map(|(i, j, w)| ((i, j), w)).unzip();
            if pairs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(
                    "conversion edges must be strictly sorted by (target, source)",
                ));
            }
            let graph = BiadjacencyMatrix::new(doc.target_gene_ids, doc.source_gene_ids, pairs)?;
            MaskedLinearLayer::hard(graph, weights)
        }
        Mode::Soft => {
            if doc.edges.is_some() {
                return Err(Error::invalid(
                    "soft conversion takes `mask` and `weights`, not `edges`",
                ));
            }
            let mask = doc
                .mask
                .ok_or_else(|| Error::invalid("soft conversion is missing `mask`"))?;
            let weights = doc
                .weights
                .ok_or_else(|| Error::invalid("soft conversion is missing `weights`"))?;
            let graph = BiadjacencyMatrix::new(doc.target_gene_ids, doc.source_gene_ids, mask)?;
            MaskedLinearLayer::soft(graph, weights)
        }
    }
}

impl Model {
    pub fn new(network: FeedforwardNetwork, loss: LossKind) -> Self {
        Self {
            network,
            loss,
            input_gene_ids: None,
            conversion: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(ids) = &self.input_gene_ids {
            if ids.len() != self.network.input_dim() {
                return Err(Error::invalid(format!(
                    "{} input gene ids for a network with {} inputs",
                    ids.len(),
                    self.network.input_dim()
                )));
            }
        }
        if let Some(layer) = &self.conversion {
            if layer.n_targets() != self.network.input_dim() {
                return Err(Error::invalid(format!(
                    "conversion produces {} genes, network expects {}",
                    layer.n_targets(),
                    self.network.input_dim()
                )));
            }
            if let Some(ids) = &self.input_gene_ids {
                if ids.as_slice() != layer.mask().target_gene_ids() {
                    return Err(Error::invalid(
                        "network input genes differ from the conversion's target genes",
                    ));
                }
            }
        }
        if self.loss == LossKind::Mse && self.network.output_dim() != 1 {
            return Err(Error::invalid("mse models must have a single output"));
        }
        if self.loss == LossKind::CrossEntropy && self.network.output_dim() < 2 {
            return Err(Error::invalid(
                "cross-entropy models need at least two outputs",
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let doc = ModelDoc {
            network: network_doc(&self.network, self.loss, self.input_gene_ids.clone()),
            conversion: self.conversion.as_ref().map(conversion_doc),
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        let layers = doc
            .network
            .layers
            .into_iter()
            .map(|l| DenseLayer::new(l.rows, l.cols, l.weights, l.bias, l.activation))
            .collect::<Result<Vec<_>>>()?;
        let mut network = FeedforwardNetwork::new(layers)?;
        network.set_frozen(doc.network.frozen);
        let model = Self {
            network,
            loss: doc.network.loss,
            input_gene_ids: doc.network.input_gene_ids,
            conversion: doc.conversion.map(conversion_from_doc).transpose()?,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn read<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_json(&text)
    }
}

/// Serialized form of a network alone; used to check that a frozen head is untouched.
pub fn network_json(net: &FeedforwardNetwork) -> String {
    serde_json::to_string_pretty(&network_doc(net, LossKind::Mse, None))
        .expect("network documents always serialize")
}
