//! Exhaustive checks over every sentence order of short chain documents.

use std::cmp::Ordering;

use cohkit::fixtures::{chain_document, overlapping_chain_document};
use cohkit::score::compare_coherence;
use cohkit::{
    AnnotatedDocument, EntropyMode, GraphMetricConfig, ModelId, Scorer, ScoringConfig, Weighting,
};

fn all_orders(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in all_orders(n - 1) {
        for pos in 0..=rest.len() {
            let mut o = rest.clone();
            o.insert(pos, n - 1);
            out.push(o);
        }
    }
    out
}

fn distance_cfg() -> ScoringConfig {
    ScoringConfig {
        entropy_mode: EntropyMode::Ngram,
        graph: GraphMetricConfig {
            weighting: Weighting::DistanceDiscounted,
            ..GraphMetricConfig::default()
        },
    }
}

/// Counts orders scoring strictly above and equal to the original.
fn rank_of_original(doc: &AnnotatedDocument, model: ModelId) -> (usize, usize) {
    let cfg = distance_cfg();
    let base = Scorer::new(doc).score(model, &cfg);
    let mut above = 0;
    let mut equal = 0;
    let identity: Vec<usize> = (0..doc.sentence_count()).collect();
    for order in all_orders(doc.sentence_count())
        .into_iter()
        .filter(|o| *o != identity)
    {
        let s = Scorer::new(&doc.reordered(&order)).score(model, &cfg);
        match compare_coherence(&s, &base) {
            Ordering::Greater => above += 1,
            Ordering::Equal => equal += 1,
            Ordering::Less => {}
        }
    }
    (above, equal)
}

#[test]
fn order_enumeration_is_complete() {
    let orders = all_orders(5);
    assert_eq!(orders.len(), 120);
    assert!(orders.contains(&vec![0, 1, 2, 3, 4]));
    let mut sorted = orders.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 120);
}

#[test]
fn original_order_is_never_beaten_on_overlapping_chains() {
    for n in 4..=6 {
        let doc = overlapping_chain_document("ov", n, 9);
        for model in [
            ModelId::Atf,
            ModelId::Awtf,
            ModelId::EntityDistance,
            ModelId::Betweenness,
        ] {
            let (above, _) = rank_of_original(&doc, model);
            assert_eq!(above, 0, "{model} on {n} sentences");
        }
    }
}

#[test]
fn reversal_is_the_only_tie_for_atf() {
    // Reading a chain backwards links the same neighbours.
    for n in 4..=6 {
        let doc = chain_document("c", n, 6);
        assert_eq!(
            rank_of_original(&doc, ModelId::Atf),
            (0, 1),
            "{n} sentences"
        );
    }
}
