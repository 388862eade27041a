//! The bipartite orthology graph and its construction from similarity scores.
//!
//! Rows of the biadjacency matrix index target-species genes, columns index
//! source-species genes. Edges are kept sorted in row-major order together
//! with compressed-row offsets, so a row's edges are a contiguous slice.

mod kmer;
mod rbh;

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

pub use kmer::kmer_similarity;
pub use rbh::{
    best_hits, build_rbh_graph, read_score_table, write_score_table, RbhConfig, ScoreEntry,
    ScoreTable,
};

use crate::error::{Error, Result};
use crate::tsv::{check_id, split_exact, Lines};

pub const GRAPH_HEADER: &str = "target_gene\tsource_gene";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiadjacencyMatrix {
    target_gene_ids: Vec<String>,
    source_gene_ids: Vec<String>,
    edges: Vec<(usize, usize)>,
    row_ptr: Vec<usize>,
}

pub(crate) fn index_ids(ids: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (k, id) in ids.iter().enumerate() {
        if id.is_empty() {
            return Err(Error::invalid(format!("empty {what} gene id")));
        }
        if map.insert(id.clone(), k).is_some() {
            return Err(Error::invalid(format!("duplicate {what} gene id `{id}`")));
        }
    }
    Ok(map)
}

impl BiadjacencyMatrix {
    /// Builds a graph from `(target index, source index)` pairs in any order.
    pub fn new(
        target_gene_ids: Vec<String>,
        source_gene_ids: Vec<String>,
        mut edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        index_ids(&target_gene_ids, "target")?;
        index_ids(&source_gene_ids, "source")?;
        let (n_t, n_s) = (target_gene_ids.len(), source_gene_ids.len());
        if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| i >= n_t || j >= n_s) {
            return Err(Error::invalid(format!(
                "edge ({i}, {j}) out of bounds for {n_t}x{n_s} graph"
            )));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate edge {:?}", w[0])));
        }
        let mut row_ptr = vec![0; n_t + 1];
        for &(i, _) in &edges {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n_t {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            target_gene_ids,
            source_gene_ids,
            edges,
            row_ptr,
        })
    }

    pub fn empty(target_gene_ids: Vec<String>, source_gene_ids: Vec<String>) -> Result<Self> {
        Self::new(target_gene_ids, source_gene_ids, Vec::new())
    }

    pub fn n_targets(&self) -> usize {
        self.target_gene_ids.len()
    }

    pub fn n_sources(&self) -> usize {
        self.source_gene_ids.len()
    }

    pub fn target_gene_ids(&self) -> &[String] {
        &self.target_gene_ids
    }

    pub fn source_gene_ids(&self) -> &[String] {
        &self.source_gene_ids
    }

    /// Edges sorted by (target, source).
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Positions in [`edges`](Self::edges) belonging to target row `i`.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.n_targets() && self.edges[self.row_range(i)].binary_search(&(i, j)).is_ok()
    }

    /// Row-major dense {0,1} mask.
    pub fn to_dense(&self) -> Vec<u8> {
        let mut dense = vec![0u8; self.n_targets() * self.n_sources()];
        for &(i, j) in &self.edges {
            dense[i * self.n_sources() + j] = 1;
        }
        dense
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{GRAPH_HEADER}")?;
        for &(i, j) in &self.edges {
            writeln!(
                out,
                "{}\t{}",
                self.target_gene_ids[i], self.source_gene_ids[j]
            )?;
        }
        Ok(())
    }

    /// Reads edges by gene name; the gene universes fix row and column order.
    pub fn read_tsv<R: BufRead>(
        reader: R,
        target_gene_ids: Vec<String>,
        source_gene_ids: Vec<String>,
    ) -> Result<Self> {
        let targets = index_ids(&target_gene_ids, "target")?;
        let sources = index_ids(&source_gene_ids, "source")?;
        let mut lines = Lines::new(reader);
        lines.expect_header(GRAPH_HEADER)?;
        let mut seen = HashSet::new();
        let mut edges = Vec::new();
        while let Some((n, text)) = lines.next_line()? {
            let cells = split_exact(text, 2, n)?;
            check_id(cells[0], n)?;
            check_id(cells[1], n)?;
            let i = *targets
                .get(cells[0])
                .ok_or_else(|| Error::parse(n, format!("unknown target gene `{}`", cells[0])))?;
            let j = *sources
                .get(cells[1])
                .ok_or_else(|| Error::parse(n, format!("unknown source gene `{}`", cells[1])))?;
            if !seen.insert((i, j)) {
                return Err(Error::parse(
                    n,
                    format!("duplicate edge `{}`-`{}`", cells[0], cells[1]),
                ));
            }
            edges.push((i, j));
        }
        Self::new(target_gene_ids, source_gene_ids, edges)
    }
}
