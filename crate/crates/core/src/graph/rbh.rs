//! Reciprocal best hits over directed similarity score tables.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use super::{index_ids, BiadjacencyMatrix};
use crate::error::{Error, Result};
use crate::tsv::{check_id, fmt_f64, parse_f64, split_exact, Lines};

pub const SCORE_HEADER: &str = "query\tsubject\tscore";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub query: String,
    pub subject: String,
    pub score: f64,
}

/// Directed similarity scores of query-species genes against subject-species genes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub query_species: String,
    pub subject_species: String,
    entries: Vec<ScoreEntry>,
}

impl ScoreTable {
    pub fn new(
        query_species: impl Into<String>,
        subject_species: impl Into<String>,
        entries: Vec<ScoreEntry>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !e.score.is_finite() || e.score < 0.0 {
                return Err(Error::invalid(format!(
                    "score {} for ({}, {}) must be finite and non-negative",
                    e.score, e.query, e.subject
                )));
            }
            if !seen.insert((e.query.as_str(), e.subject.as_str())) {
                return Err(Error::invalid(format!(
                    "duplicate score pair ({}, {})",
                    e.query, e.subject
                )));
            }
        }
        Ok(Self {
            query_species: query_species.into(),
            subject_species: subject_species.into(),
            entries,
        })
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbhConfig {
    /// Minimum score for a hit; a score equal to the threshold counts.
    pub threshold: f64,
    /// A subject is a best hit when its score is within this distance of the row maximum.
    pub tie_tolerance: f64,
}

impl Default for RbhConfig {
    fn default() -> Self {
        Self {
            threshold: 0.0,
            tie_tolerance: 0.0,
        }
    }
}

impl RbhConfig {
    pub fn new(threshold: f64, tie_tolerance: f64) -> Result<Self> {
        let cfg = Self {
            threshold,
            tie_tolerance,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::invalid(format!(
                "threshold {} must be >= 0",
                self.threshold
            )));
        }
        if !(self.tie_tolerance.is_finite() && self.tie_tolerance >= 0.0) {
            return Err(Error::invalid(format!(
                "tie tolerance {} must be >= 0",
                self.tie_tolerance
            )));
        }
        Ok(())
    }
}

/// Best-hit subjects per query gene. Queries without any qualifying subject are omitted.
pub fn best_hits(scores: &ScoreTable, cfg: &RbhConfig) -> BTreeMap<String, BTreeSet<String>> {
    let mut row_max: HashMap<&str, f64> = HashMap::new();
    for e in &scores.entries {
        let m = row_max.entry(e.query.as_str()).or_insert(e.score);
        if e.score > *m {
            *m = e.score;
        }
    }
    let mut hits: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for e in &scores.entries {
        let max = row_max[e.query.as_str()];
        if e.score >= cfg.threshold && e.score >= max - cfg.tie_tolerance {
            hits.entry(e.query.clone())
                .or_default()
                .insert(e.subject.clone());
        }
    }
    hits
}

fn check_known(
    table: &ScoreTable,
    queries: &HashMap<String, usize>,
    subjects: &HashMap<String, usize>,
    name: &str,
) -> Result<()> {
    for e in &table.entries {
        if !queries.contains_key(&e.query) {
            return Err(Error::unknown_gene(&e.query, format!("query of {name}")));
        }
        if !subjects.contains_key(&e.subject) {
            return Err(Error::unknown_gene(
                &e.subject,
                format!("subject of {name}"),
            ));
        }
    }
    Ok(())
}

/// Builds the orthology graph from target-vs-source scores (`scores_tq`) and
/// source-vs-target scores (`scores_qt`). A pair is an edge when each gene is a
/// best hit of the other; the threshold applies in both directions.
pub fn build_rbh_graph(
    scores_tq: &ScoreTable,
    scores_qt: &ScoreTable,
    cfg: &RbhConfig,
    target_genes: &[String],
    source_genes: &[String],
) -> Result<BiadjacencyMatrix> {
    cfg.validate()?;
    let targets = index_ids(target_genes, "target")?;
    let sources = index_ids(source_genes, "source")?;
    check_known(scores_tq, &targets, &sources, "target-vs-source scores")?;
    check_known(scores_qt, &sources, &targets, "source-vs-target scores")?;

    let forward = best_hits(scores_tq, cfg);
    let reverse = best_hits(scores_qt, cfg);
    let mut edges = Vec::new();
    for (target, subjects) in &forward {
        for source in subjects {
            let reciprocal = reverse
                .get(source)
                .is_some_and(|back| back.contains(target));
            if reciprocal {
                edges.push((targets[target], sources[source]));
            }
        }
    }
    BiadjacencyMatrix::new(target_genes.to_vec(), source_genes.to_vec(), edges)
}

pub fn read_score_table<R: BufRead>(
    reader: R,
    query_species: &str,
    subject_species: &str,
) -> Result<ScoreTable> {
    let mut lines = Lines::new(reader);
    lines.expect_header(SCORE_HEADER)?;
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    while let Some((n, text)) = lines.next_line()? {
        let cells = split_exact(text, 3, n)?;
        check_id(cells[0], n)?;
        check_id(cells[1], n)?;
        let score = parse_f64(cells[2], n)?;
        if score < 0.0 {
            return Err(Error::parse(n, format!("negative score `{}`", cells[2])));
        }
        if !seen.insert((cells[0].to_owned(), cells[1].to_owned())) {
            return Err(Error::parse(
                n,
                format!("duplicate pair `{}`-`{}`", cells[0], cells[1]),
            ));
        }
        entries.push(ScoreEntry {
            query: cells[0].to_owned(),
            subject: cells[1].to_owned(),
            score,
        });
    }
    ScoreTable::new(query_species, subject_species, entries)
}

pub fn write_score_table<W: Write>(table: &ScoreTable, mut out: W) -> Result<()> {
    writeln!(out, "{SCORE_HEADER}")?;
    for e in &table.entries {
        writeln!(out, "{}\t{}\t{}", e.query, e.subject, fmt_f64(e.score))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, &str, f64)]) -> ScoreTable {
        let entries = rows
            .iter()
            .map(|&(q, s, score)| ScoreEntry {
                query: q.into(),
                subject: s.into(),
                score,
            })
            .collect();
        ScoreTable::new("a", "b", entries).unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn best_hit_examples() {
        let cfg = RbhConfig::new(0.5, 0.0).unwrap();
        let hits = best_hits(&table(&[("q1", "s1", 0.9), ("q1", "s2", 0.3)]), &cfg);
        assert_eq!(hits, BTreeMap::from([("q1".to_string(), set(&["s1"]))]));

        assert!(best_hits(&table(&[("q1", "s1", 0.4)]), &cfg).is_empty());

        let hits = best_hits(&table(&[("q1", "s1", 0.9), ("q1", "s2", 0.9)]), &cfg);
        assert_eq!(
            hits,
            BTreeMap::from([("q1".to_string(), set(&["s1", "s2"]))])
        );
    }

    #[test]
    fn threshold_is_inclusive() {
        let cfg = RbhConfig::new(0.5, 0.0).unwrap();
        assert_eq!(best_hits(&table(&[("q", "s", 0.5)]), &cfg).len(), 1);
    }

    #[test]
    fn rbh_examples() {
        let cfg = RbhConfig::new(0.5, 0.0).unwrap();
        let targets = strings(&["t1", "t2"]);
        let sources = strings(&["s1"]);

        let g = build_rbh_graph(
            &table(&[("t1", "s1", 0.9)]),
            &table(&[("s1", "t1", 0.8)]),
            &cfg,
            &targets,
            &sources,
        )
        .unwrap();
        assert_eq!(g.edges(), &[(0, 0)]);

        let g = build_rbh_graph(
            &table(&[("t1", "s1", 0.9)]),
            &table(&[("s1", "t2", 0.9), ("s1", "t1", 0.6)]),
            &cfg,
            &targets,
            &sources,
        )
        .unwrap();
        assert!(g.edges().is_empty());

        let g = build_rbh_graph(&table(&[]), &table(&[]), &cfg, &targets, &sources).unwrap();
        assert!(g.edges().is_empty());
    }

    #[test]
    fn many_to_many() {
        let cfg = RbhConfig::default();
        let tq = table(&[("t1", "s1", 1.0), ("t1", "s2", 1.0), ("t2", "s1", 1.0)]);
        let qt = table(&[("s1", "t1", 2.0), ("s1", "t2", 2.0), ("s2", "t1", 1.0)]);
        let g = build_rbh_graph(
            &tq,
            &qt,
            &cfg,
            &strings(&["t1", "t2"]),
            &strings(&["s1", "s2"]),
        )
        .unwrap();
        assert_eq!(g.edges(), &[(0, 0), (0, 1), (1, 0)]);
    }

    #[test]
    fn unknown_genes_are_rejected() {
        let cfg = RbhConfig::default();
        let err = build_rbh_graph(
            &table(&[("t9", "s1", 1.0)]),
            &table(&[]),
            &cfg,
            &strings(&["t1"]),
            &strings(&["s1"]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownGene { ref gene, .. } if gene == "t9"));
        let err = build_rbh_graph(
            &table(&[]),
            &table(&[("s1", "x", 1.0)]),
            &cfg,
            &strings(&["t1"]),
            &strings(&["s1"]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownGene { ref gene, .. } if gene == "x"));
    }

    #[test]
    fn table_invariants() {
        let dup = vec![
            ScoreEntry {
                query: "a".into(),
                subject: "b".into(),
                score: 1.0,
            },
            ScoreEntry {
                query: "a".into(),
                subject: "b".into(),
                score: 2.0,
            },
        ];
        assert!(ScoreTable::new("x", "y", dup).is_err());
        let neg = vec![ScoreEntry {
            query: "a".into(),
            subject: "b".into(),
            score: -1.0,
        }];
        assert!(ScoreTable::new("x", "y", neg).is_err());
        assert!(RbhConfig::new(-0.1, 0.0).is_err());
        assert!(RbhConfig::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn score_tsv() {
        let text = "query\tsubject\tscore\nt1\ts1\t0.9\nt1\ts2\t12\n";
        let t = read_score_table(text.as_bytes(), "t", "s").unwrap();
        assert_eq!(t.entries().len(), 2);
        let mut out = Vec::new();
        write_score_table(&t, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "query\tsubject\tscore\nt1\ts1\t0.9\nt1\ts2\t12.0\n"
        );

        let bad = "query\tsubject\tscore\nt1\ts1\t0.9\nt1\ts1\t0.8\n";
        assert!(matches!(
            read_score_table(bad.as_bytes(), "t", "s"),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad = "query\tsubject\tscore\nt1\ts1\t-2\n";
        assert!(matches!(
            read_score_table(bad.as_bytes(), "t", "s"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
