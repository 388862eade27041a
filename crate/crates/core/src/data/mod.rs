//! Expression matrices, phenotype labels and the synthetic benchmark generator.
//!
//! Expression values are taken as already normalized; no transform is applied
//! on load.

mod synth;

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

pub use synth::{
    generate_synthetic, SyntheticBundle, SyntheticSpec, SOURCE_SPECIES, TARGET_SPECIES,
};

use crate::error::{Error, Result};
use crate::loss::{LossKind, Target};
use crate::tsv::{check_id, fmt_f64, parse_f64, Lines};

pub const PHENOTYPE_HEADER: &str = "sample_id\tlabel";

#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Regression(Vec<f64>),
    Classes(Vec<usize>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Regression(v) => v.len(),
            Labels::Classes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn loss_kind(&self) -> LossKind {
        match self {
            Labels::Regression(_) => LossKind::Mse,
            Labels::Classes(_) => LossKind::CrossEntropy,
        }
    }

    pub fn target(&self, k: usize) -> Target {
        match self {
            Labels::Regression(v) => Target::Value(v[k]),
            Labels::Classes(v) => Target::Class(v[k]),
        }
    }

    fn select(&self, rows: &[usize]) -> Labels {
        match self {
            Labels::Regression(v) => Labels::Regression(rows.iter().map(|&k| v[k]).collect()),
            Labels::Classes(v) => Labels::Classes(rows.iter().map(|&k| v[k]).collect()),
        }
    }
}

/// Samples x genes expression matrix, optionally with one phenotype per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionDataset {
    pub species: String,
    gene_ids: Vec<String>,
    sample_ids: Vec<String>,
    values: Vec<f64>,
    labels: Option<Labels>,
}

fn unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if id.is_empty() {
            return Err(Error::invalid(format!("empty {what} id")));
        }
        if !seen.insert(id.as_str()) {
            return Err(Error::invalid(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

impl ExpressionDataset {
    pub fn new(
        species: impl Into<String>,
        gene_ids: Vec<String>,
        sample_ids: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        unique(&gene_ids, "gene")?;
        unique(&sample_ids, "sample")?;
        if values.len() != gene_ids.len() * sample_ids.len() {
            return Err(Error::invalid(format!(
                "{} values for {} samples x {} genes",
                values.len(),
                sample_ids.len(),
                gene_ids.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("expression values must be finite"));
        }
        Ok(Self {
            species: species.into(),
            gene_ids,
            sample_ids,
            values,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if labels.len() != self.n_samples() {
            return Err(Error::invalid(format!(
                "{} labels for {} samples",
                labels.len(),
                self.n_samples()
            )));
        }
        if let Labels::Regression(v) = &labels {
            if v.iter().any(|y| !y.is_finite()) {
                return Err(Error::invalid("labels must be finite"));
            }
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_genes(&self) -> usize {
        self.gene_ids.len()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.n_genes();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    /// Labels, or an error naming what needed them.
    pub fn require_labels(&self, what: &str) -> Result<&Labels> {
        self.labels
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("{what} needs phenotype labels")))
    }

    /// Rows `rows` (in that order) as a new dataset, labels included.
    pub fn select_samples(&self, rows: &[usize]) -> ExpressionDataset {
        let values = rows
            .iter()
            .flat_map(|&k| self.row(k).iter().copied())
            .collect();
        ExpressionDataset {
            species: self.species.clone(),
            gene_ids: self.gene_ids.clone(),
            sample_ids: rows.iter().map(|&k| self.sample_ids[k].clone()).collect(),
            values,
            labels: self.labels.as_ref().map(|l| l.select(rows)),
        }
    }

    /// Reorders columns to `required_gene_ids`, dropping genes not listed.
    /// Returns the aligned dataset and the number of dropped genes.
    pub fn align_to_genes(
        &self,
        required_gene_ids: &[String],
    ) -> Result<(ExpressionDataset, usize)> {
        unique(required_gene_ids, "required gene")?;
        let position: HashMap<&str, usize> = self
            .gene_ids
            .iter()
            .enumerate()
            .map(|(k, g)| (g.as_str(), k))
            .collect();
        let columns = required_gene_ids
            .iter()
            .map(|g| {
                position.get(g.as_str()).copied().ok_or_else(|| {
                    Error::unknown_gene(g, format!("missing from {} expression data", self.species))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let values = (0..self.n_samples())
            .flat_map(|k| {
                let row = self.row(k);
                columns.iter().map(move |&c| row[c])
            })
            .collect();
        let dropped = self.n_genes() - columns.len();
        Ok((
            ExpressionDataset {
                species: self.species.clone(),
                gene_ids: required_gene_ids.to_vec(),
                sample_ids: self.sample_ids.clone(),
                values,
                labels: self.labels.clone(),
            },
            dropped,
        ))
    }

    pub fn read_tsv<R: BufRead>(reader: R, species: &str) -> Result<Self> {
        let mut lines = Lines::new(reader);
        let gene_ids: Vec<String> = match lines.next_line()? {
            None => return Err(Error::parse(1, "missing header")),
            Some((n, header)) => {
                let mut cells = header.split('\t');
                if cells.next() != Some("sample_id") {
                    return Err(Error::parse(n, "header must start with `sample_id`"));
                }
                let ids: Vec<String> = cells.map(str::to_owned).collect();
                let mut seen = HashSet::new();
                for id in &ids {
                    check_id(id, n)?;
                    if !seen.insert(id.as_str()) {
                        return Err(Error::parse(n, format!("duplicate gene id `{id}`")));
                    }
                }
                ids
            }
        };
        let mut sample_ids = Vec::new();
        let mut seen = HashSet::new();
        let mut values = Vec::new();
        while let Some((n, text)) = lines.next_line()? {
            let mut cells = text.split('\t');
            let sample = cells.next().unwrap_or_default();
            check_id(sample, n)?;
            if !seen.insert(sample.to_owned()) {
                return Err(Error::parse(n, format!("duplicate sample id `{sample}`")));
            }
            let before = values.len();
            for cell in cells {
                values.push(parse_f64(cell, n)?);
            }
            let found = values.len() - before;
            if found != gene_ids.len() {
                return Err(Error::parse(
                    n,
                    format!("expected {} values, found {found}", gene_ids.len()),
                ));
            }
            sample_ids.push(sample.to_owned());
        }
        Self::new(species, gene_ids, sample_ids, values)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "sample_id")?;
        for g in &self.gene_ids {
            write!(out, "\t{g}")?;
        }
        writeln!(out)?;
        for (k, sample) in self.sample_ids.iter().enumerate() {
            write!(out, "{sample}")?;
            for &v in self.row(k) {
                write!(out, "\t{}", fmt_f64(v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Attaches labels from a phenotype table by sample id. Every sample must
    /// have a label; labels for other samples are ignored.
    pub fn attach_phenotypes(self, table: &PhenotypeTable) -> Result<Self> {
        let index: HashMap<&str, usize> = table
            .sample_ids
            .iter()
            .enumerate()
            .map(|(k, s)| (s.as_str(), k))
            .collect();
        let rows =
            self.sample_ids
                .iter()
                .map(|s| {
                    index.get(s.as_str()).copied().ok_or_else(|| {
                        Error::invalid(format!("no phenotype label for sample `{s}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
        let labels = table.labels.select(&rows);
        self.with_labels(labels)
    }

    /// The labels of this dataset as a phenotype table in sample order.
    pub fn phenotype_table(&self) -> Option<PhenotypeTable> {
        self.labels.as_ref().map(|labels| PhenotypeTable {
            sample_ids: self.sample_ids.clone(),
            labels: labels.clone(),
        })
    }
}

/// Contents of a `sample_id<TAB>label` file.
#[derive(Debug, Clone, PartialEq)]
pub struct PhenotypeTable {
    pub sample_ids: Vec<String>,
    pub labels: Labels,
}

impl PhenotypeTable {
    /// `kind` decides how labels are parsed: decimals for MSE, class indices
    /// for cross-entropy.
    pub fn read_tsv<R: BufRead>(reader: R, kind: LossKind) -> Result<Self> {
        let mut lines = Lines::new(reader);
        lines.expect_header(PHENOTYPE_HEADER)?;
        let mut sample_ids = Vec::new();
        let mut seen = HashSet::new();
        let mut values = Vec::new();
        let mut classes = Vec::new();
        while let Some((n, text)) = lines.next_line()? {
            let cells = crate::tsv::split_exact(text, 2, n)?;
            check_id(cells[0], n)?;
            if !seen.insert(cells[0].to_owned()) {
                return Err(Error::parse(
                    n,
                    format!("duplicate sample id `{}`", cells[0]),
                ));
            }
            match kind {
                LossKind::Mse => values.push(parse_f64(cells[1], n)?),
                LossKind::CrossEntropy => {
                    let digits =
                        !cells[1].is_empty() && cells[1].bytes().all(|b| b.is_ascii_digit());
                    let class = digits.then(|| cells[1].parse::<usize>().ok()).flatten();
                    classes.push(class.ok_or_else(|| {
                        Error::parse(
                            n,
                            format!(
                                "class label must be a non-negative integer, got `{}`",
                                cells[1]
                            ),
                        )
                    })?);
                }
            }
            sample_ids.push(cells[0].to_owned());
        }
        let labels = match kind {
            LossKind::Mse => Labels::Regression(values),
            LossKind::CrossEntropy => Labels::Classes(classes),
        };
        Ok(Self { sample_ids, labels })
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{PHENOTYPE_HEADER}")?;
        for (k, s) in self.sample_ids.iter().enumerate() {
            match &self.labels {
                Labels::Regression(v) => writeln!(out, "{s}\t{}", fmt_f64(v[k]))?,
                Labels::Classes(v) => writeln!(out, "{s}\t{}", v[k])?,
            }
        }
        Ok(())
    }
}
