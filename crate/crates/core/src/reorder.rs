//! Sentence reordering evaluation.
//!
//! Each document is shuffled `k` times; a model earns a win whenever it finds
//! the original strictly more coherent than a shuffled copy. Ties are
//! reported separately and do not count as wins.

use std::cmp::Ordering;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::document::AnnotatedDocument;
use crate::error::{Error, Result};
use crate::score::{compare_coherence, ModelId};
use crate::scoring::{Scorer, ScoringConfig};

pub const DEFAULT_PERMUTATIONS: usize = 20;

/// Draws a uniformly random non-identity sentence order.
pub fn permutation_order<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    assert!(n >= 2);
    let identity: Vec<usize> = (0..n).collect();
    loop {
        let mut order = identity.clone();
        order.shuffle(rng);
        if order != identity {
            return order;
        }
    }
}

pub fn permute_document<R: Rng>(doc: &AnnotatedDocument, rng: &mut R) -> Result<AnnotatedDocument> {
    if doc.sentence_count() < 2 {
        return Err(Error::NotPermutable(doc.doc_id.clone()));
    }
    Ok(doc.reordered(&permutation_order(doc.sentence_count(), rng)))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// RNG stream for one document, independent of scheduling.
pub fn document_rng(seed: u64, doc_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(doc_id.as_bytes()))
}

/// `n! - 1`, saturating.
fn non_identity_orders(n: usize) -> usize {
    (1..=n)
        .try_fold(1usize, |acc, i| acc.checked_mul(i))
        .map_or(usize::MAX, |f| f - 1)
}

#[derive(Debug, Clone)]
pub struct PermutationSet {
    pub doc_id: String,
    pub original: AnnotatedDocument,
    pub permutations: Vec<AnnotatedDocument>,
    pub seed: u64,
}

/// Draws `k` shuffled copies of `doc`. Copies are pairwise distinct whenever
/// the document has at least `k` non-identity orders.
pub fn permutation_set(doc: &AnnotatedDocument, k: usize, seed: u64) -> Result<PermutationSet> {
    let n = doc.sentence_count();
    if n < 2 {
        return Err(Error::NotPermutable(doc.doc_id.clone()));
    }
    let mut rng = document_rng(seed, &doc.doc_id);
    let distinct = non_identity_orders(n) >= k;
    let mut orders: Vec<Vec<usize>> = Vec::with_capacity(k);
    while orders.len() < k {
        let order = permutation_order(n, &mut rng);
        if distinct && orders.contains(&order) {
            continue;
        }
        orders.push(order);
    }
    Ok(PermutationSet {
        doc_id: doc.doc_id.clone(),
        original: doc.clone(),
        permutations: orders.iter().map(|o| doc.reordered(o)).collect(),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocumentOutcome {
    pub doc_id: String,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub model: ModelId,
    pub k: usize,
    /// Sorted by `doc_id`.
    pub per_document: Vec<DocumentOutcome>,
    /// Documents with fewer than two sentences.
    pub skipped: usize,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    /// `wins / (wins + ties + losses)`; `None` when no pair was compared.
    pub accuracy: Option<f64>,
}

impl AccuracyReport {
    fn from_outcomes(
        model: ModelId,
        k: usize,
        mut per_document: Vec<DocumentOutcome>,
        skipped: usize,
    ) -> Self {
        per_document.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let wins = per_document.iter().map(|d| d.wins).sum();
        let ties = per_document.iter().map(|d| d.ties).sum();
        let losses = per_document.iter().map(|d| d.losses).sum();
        let total: usize = wins + ties + losses;
        Self {
            model,
            k,
            per_document,
            skipped,
            wins,
            ties,
            losses,
            accuracy: (total > 0).then(|| wins as f64 / total as f64),
        }
    }
}

/// Evaluates several models on the same permutations of every document.
/// Reports come back in the order of `models`.
pub fn evaluate_models(
    corpus: &[AnnotatedDocument],
    models: &[ModelId],
    cfg: &ScoringConfig,
    k: usize,
    seed: u64,
) -> Result<Vec<AccuracyReport>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let eligible: Vec<&AnnotatedDocument> =
        corpus.iter().filter(|d| d.sentence_count() >= 2).collect();
    let skipped = corpus.len() - eligible.len();
    if skipped > 0 {
        log::warn!("skipping {skipped} document(s) with fewer than two sentences");
    }

    let outcomes: Vec<Vec<DocumentOutcome>> = eligible
        .par_iter()
        .map(|doc| -> Result<Vec<DocumentOutcome>> {
            let set = permutation_set(doc, k, seed)?;
            let original = Scorer::new(&set.original);
            let shuffled: Vec<Scorer> = set.permutations.iter().map(Scorer::new).collect();
            Ok(models
                .iter()
                .map(|&model| {
                    let base = original.score(model, cfg);
                    let mut out = DocumentOutcome {
                        doc_id: doc.doc_id.clone(),
                        wins: 0,
                        ties: 0,
                        losses: 0,
                    };
                    for p in &shuffled {
                        match compare_coherence(&base, &p.score(model, cfg)) {
                            Ordering::Greater => out.wins += 1,
                            Ordering::Equal => out.ties += 1,
                            Ordering::Less => out.losses += 1,
                        }
                    }
                    out
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    Ok(models
        .iter()
        .enumerate()
        .map(|(m, &model)| {
            let per_doc = outcomes.iter().map(|o| o[m].clone()).collect();
            AccuracyReport::from_outcomes(model, k, per_doc, skipped)
        })
        .collect())
}

pub fn evaluate_reordering(
    corpus: &[AnnotatedDocument],
    model: ModelId,
    cfg: &ScoringConfig,
    k: usize,
    seed: u64,
) -> Result<AccuracyReport> {
    Ok(evaluate_models(corpus, &[model], cfg, k, seed)?.remove(0))
}

/// `doc_id,model,wins,ties,losses` rows for every report.
pub fn write_reports_csv<W: Write>(mut out: W, reports: &[AccuracyReport]) -> std::io::Result<()> {
    writeln!(out, "doc_id,model,wins,ties,losses")?;
    for r in reports {
        for d in &r.per_document {
            writeln!(
                out,
                "{},{},{},{},{}",
                d.doc_id, r.model, d.wins, d.ties, d.losses
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SummaryEntry {
    model: String,
    k: usize,
    documents: usize,
    skipped: usize,
    wins: usize,
    ties: usize,
    losses: usize,
    accuracy: Option<f64>,
}

pub fn summary_json(reports: &[AccuracyReport], seed: u64) -> serde_json::Value {
    let models: Vec<SummaryEntry> = reports
        .iter()
        .map(|r| SummaryEntry {
            model: r.model.to_string(),
            k: r.k,
            documents: r.per_document.len(),
            skipped: r.skipped,
            wins: r.wins,
            ties: r.ties,
            losses: r.losses,
            accuracy: r.accuracy.map(|a| (a * 1e6).round() / 1e6),
        })
        .collect();
    serde_json::json!({ "seed": seed, "models": models })
}
