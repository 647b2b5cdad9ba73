//! Entropy of discourse-entity n-grams and the reciprocal-entropy
//! coherence score.
//!
//! A `k`-order model works on `(k + 1)`-grams taken over the document-wide
//! entity sequence; windows run across sentence boundaries.

use std::collections::{BTreeMap, HashMap};

use crate::grid::{entity_sequence, EntityGrid};
use crate::score::{CoherenceScore, ModelId};

/// Floor applied to entropy before taking its reciprocal.
pub const ENTROPY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyMode {
    /// Shannon entropy of the (k+1)-gram distribution.
    #[default]
    Ngram,
    /// Markov-chain form: predecessor distributions weighted by unigram
    /// probability of the following entity.
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramDistribution {
    pub n: usize,
    pub counts: BTreeMap<Vec<String>, usize>,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyScore {
    pub order_k: usize,
    pub bits: f64,
    pub defined: bool,
}

impl EntropyScore {
    fn undefined(order_k: usize) -> Self {
        Self {
            order_k,
            bits: 0.0,
            defined: false,
        }
    }
}

/// Counts contiguous `n`-grams. Empty when the sequence is shorter than `n`.
pub fn ngram_counts<S: AsRef<str>>(seq: &[S], n: usize) -> NgramDistribution {
    assert!(n >= 1, "n-gram order must be positive");
    let mut counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    let mut total = 0;
    if seq.len() >= n {
        for w in seq.windows(n) {
            let key = w.iter().map(|s| s.as_ref().to_string()).collect();
            *counts.entry(key).or_insert(0) += 1;
            total += 1;
        }
    }
    NgramDistribution { n, counts, total }
}

/// Entropy in bits of a multiset of counts summing to `total`. Counts are
/// summed in sorted order so that equal multisets give identical bits.
fn entropy_of_counts(mut counts: Vec<usize>, total: usize) -> f64 {
    counts.sort_unstable();
    let t = total as f64;
    let h: f64 = counts
        .into_iter()
        .map(|c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

pub fn shannon_entropy(dist: &NgramDistribution) -> EntropyScore {
    if dist.total == 0 {
        return EntropyScore::undefined(dist.n.saturating_sub(1));
    }
    EntropyScore {
        order_k: dist.n - 1,
        bits: entropy_of_counts(dist.counts.values().copied().collect(), dist.total),
        defined: true,
    }
}

/// Markov-chain entropy of order `k`:
///
/// `H_k = -Σ_e p(e) Σ_h p(e|h) log2 p(e|h)`
///
/// with `p(e) = f(e) / |seq|` and `p(e|h) = f(h, e) / f(e)`, where `f(e)` in
/// the denominator counts the windows ending in `e`. The conditional is
/// normalized over histories of `e`, not over successors of `h`.
/// `k = 0` reduces to unigram Shannon entropy.
pub fn conditional_entropy<S: AsRef<str>>(seq: &[S], k: usize) -> EntropyScore {
    if k == 0 {
        return shannon_entropy(&ngram_counts(seq, 1));
    }
    let windows = ngram_counts(seq, k + 1);
    if windows.total == 0 {
        return EntropyScore::undefined(k);
    }
    let mut unigram: HashMap<&str, usize> = HashMap::new();
    for e in seq {
        *unigram.entry(e.as_ref()).or_insert(0) += 1;
    }
    let mut ending: HashMap<&str, usize> = HashMap::new();
    for key in windows.counts.keys() {
        *ending.entry(key[k].as_str()).or_insert(0) += windows.counts[key];
    }
    let len = seq.len() as f64;
    let mut bits = 0.0;
    for (key, &joint) in &windows.counts {
        let e = key[k].as_str();
        let p_e = unigram[e] as f64 / len;
        let p_cond = joint as f64 / ending[e] as f64;
        bits -= p_e * p_cond * p_cond.log2();
    }
    EntropyScore {
        order_k: k,
        bits: bits.max(0.0),
        defined: true,
    }
}

pub fn entropy_of_grid(grid: &EntityGrid, order_k: usize, mode: EntropyMode) -> EntropyScore {
    let seq = entity_sequence(grid);
    match mode {
        EntropyMode::Ngram => shannon_entropy(&ngram_counts(&seq, order_k + 1)),
        EntropyMode::Conditional => conditional_entropy(&seq, order_k),
    }
}

/// Reciprocal of an entropy score, floored at [`ENTROPY_FLOOR`].
pub fn coherence_from_entropy(model: ModelId, h: EntropyScore) -> CoherenceScore {
    if !h.defined {
        return CoherenceScore::undefined(model);
    }
    CoherenceScore::defined(model, 1.0 / h.bits.max(ENTROPY_FLOOR))
}

/// Entropy coherence of a grid for orders 0, 1 and 2.
pub fn entropy_coherence(grid: &EntityGrid, order_k: usize, mode: EntropyMode) -> CoherenceScore {
    let model = ModelId::entropy(order_k).expect("entropy order must be 0, 1 or 2");
    coherence_from_entropy(model, entropy_of_grid(grid, order_k, mode))
}
