//! Cross-species transfer of a trained phenotype predictor.
//!
//! A feedforward network trained on one species' gene expression is reused for
//! another species by prepending a linear conversion layer whose connections
//! follow a reciprocal-best-hit orthology graph. Only the conversion weights
//! are trained; afterwards they read as a table of functional correspondences
//! between orthologous genes.

pub mod cli;
pub mod data;
pub mod error;
pub mod graph;
pub mod interpret;
pub mod layer;
pub mod loss;
pub mod mlp;
pub mod model;
pub mod train;
pub mod tsv;

pub use data::{ExpressionDataset, Labels, PhenotypeTable, SyntheticBundle, SyntheticSpec};
pub use error::{Error, Result};
pub use graph::{BiadjacencyMatrix, RbhConfig, ScoreTable};
pub use layer::{Init, MaskedLinearLayer, Mode};
pub use loss::{LossKind, Target};
pub use mlp::{Activation, DenseLayer, FeedforwardNetwork};
pub use model::Model;
pub use train::{TrainConfig, TrainReport};
