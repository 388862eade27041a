use std::collections::HashSet;

use crate::error::{Error, Result};

fn kmers(seq: &[char], k: usize) -> HashSet<&[char]> {
    if seq.len() < k {
        return HashSet::new();
    }
    seq.windows(k).collect()
}

/// Jaccard similarity of the k-mer sets of two sequences.
///
/// Sequences shorter than `k` have no k-mers; two such sequences score 1 when
/// they are identical and 0 otherwise.
pub fn kmer_similarity(seq_a: &str, seq_b: &str, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k-mer length must be at least 1"));
    }
    if seq_a.is_empty() || seq_b.is_empty() {
        return Err(Error::invalid("k-mer similarity of an empty sequence"));
    }
    let a: Vec<char> = seq_a.chars().collect();
    let b: Vec<char> = seq_b.chars().collect();
    let (ka, kb) = (kmers(&a, k), kmers(&b, k));
    if ka.is_empty() && kb.is_empty() {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    let shared = ka.intersection(&kb).count();
    let union = ka.len() + kb.len() - shared;
    Ok(shared as f64 / union as f64)
}
