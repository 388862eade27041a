//! Reading trained conversion weights as functional-orthology evidence.
//!
//! A weight `w_ij` is the contribution of source gene `j` to target gene `i`.
//! Influence is ranked by `|w_ij|`; the signed value is always reported too.
//! Weights are raw, with no scaling by source expression levels.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::layer::{MaskedLinearLayer, Mode};
use crate::tsv::{check_id, fmt_f64, parse_f64, split_exact, Lines};

pub const WEIGHT_HEADER: &str = "target_gene\tsource_gene\tweight\ton_support";

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub target_gene_id: String,
    pub source_gene_id: String,
    pub weight: f64,
    pub on_support: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrthologyWeightTable {
    pub rows: Vec<WeightRow>,
}

/// Orders by descending magnitude, then ascending source id.
fn by_influence(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(b.0))
}

/// The (up to) `k` strongest stored weights into `target_gene_id`.
pub fn top_contributors(
    layer: &MaskedLinearLayer,
    target_gene_id: &str,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::invalid("top-k needs k >= 1"));
    }
    let mask = layer.mask();
    let i = mask
        .target_gene_ids()
        .iter()
        .position(|g| g == target_gene_id)
        .ok_or_else(|| Error::unknown_gene(target_gene_id, "not a target gene of this layer"))?;
    let sources = mask.source_gene_ids();
    let mut row: Vec<(&str, f64)> = layer
        .entries()
        .filter(|&(t, _, _)| t == i)
        .map(|(_, j, w)| (sources[j].as_str(), w))
        .collect();
    row.sort_by(|&a, &b| by_influence(a, b));
    row.truncate(k);
    Ok(row.into_iter().map(|(s, w)| (s.to_owned(), w)).collect())
}

impl OrthologyWeightTable {
    /// One row per stored weight, sorted by (target id, source id).
    pub fn from_layer(layer: &MaskedLinearLayer) -> Self {
        let mask = layer.mask();
        let (targets, sources) = (mask.target_gene_ids(), mask.source_gene_ids());
        let hard = layer.mode() == Mode::Hard;
        let mut rows: Vec<WeightRow> = layer
            .entries()
            .map(|(i, j, w)| WeightRow {
                target_gene_id: targets[i].clone(),
                source_gene_id: sources[j].clone(),
                weight: w,
                on_support: hard || mask.contains(i, j),
            })
            .collect();
        rows.sort_by(|a, b| {
            (&a.target_gene_id, &a.source_gene_id).cmp(&(&b.target_gene_id, &b.source_gene_id))
        });
        Self { rows }
    }

    /// Rows for one target gene, strongest first.
    pub fn ranked_for(&self, target_gene_id: &str) -> Vec<&WeightRow> {
        let mut rows: Vec<&WeightRow> = self
            .rows
            .iter()
            .filter(|r| r.target_gene_id == target_gene_id)
            .collect();
        rows.sort_by(|a, b| {
            by_influence((&a.source_gene_id, a.weight), (&b.source_gene_id, b.weight))
        });
        rows
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{WEIGHT_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.target_gene_id,
                r.source_gene_id,
                fmt_f64(r.weight),
                r.on_support
            )?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = Lines::new(reader);
        lines.expect_header(WEIGHT_HEADER)?;
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        while let Some((n, text)) = lines.next_line()? {
            let cells = split_exact(text, 4, n)?;
            check_id(cells[0], n)?;
            check_id(cells[1], n)?;
            if !seen.insert((cells[0].to_owned(), cells[1].to_owned())) {
                return Err(Error::parse(
                    n,
                    format!("duplicate pair `{}`-`{}`", cells[0], cells[1]),
                ));
            }
            let on_support = match cells[3] {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::parse(
                        n,
                        format!("on_support must be true or false, got `{other}`"),
                    ))
                }
            };
            rows.push(WeightRow {
                target_gene_id: cells[0].to_owned(),
                source_gene_id: cells[1].to_owned(),
                weight: parse_f64(cells[2], n)?,
                on_support,
            });
        }
        Ok(Self { rows })
    }
}

/// Builds the weight table of `layer` and writes it as TSV.
pub fn export_weight_table<W: Write>(
    layer: &MaskedLinearLayer,
    out: W,
) -> Result<OrthologyWeightTable> {
    let table = OrthologyWeightTable::from_layer(layer);
    table.write_tsv(out)?;
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportSummary {
    pub on_support_mean_abs: f64,
    pub off_support_mean_abs: f64,
    pub on_support_count: usize,
    pub off_support_count: usize,
}

/// Mean absolute weight on and off the orthology graph. Hard layers have no
/// off-graph weights; an empty class reports mean 0.
pub fn support_summary(layer: &MaskedLinearLayer) -> SupportSummary {
    let mask = layer.mask();
    let hard = layer.mode() == Mode::Hard;
    let (mut on_sum, mut off_sum, mut on_n, mut off_n) = (0.0, 0.0, 0usize, 0usize);
    for (i, j, w) in layer.entries() {
        if hard || mask.contains(i, j) {
            on_sum += w.abs();
            on_n += 1;
        } else {
            off_sum += w.abs();
            off_n += 1;
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    SupportSummary {
        on_support_mean_abs: mean(on_sum, on_n),
        off_support_mean_abs: mean(off_sum, off_n),
        on_support_count: on_n,
        off_support_count: off_n,
    }
}
