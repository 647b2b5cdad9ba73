//! Reference documents and synthetic corpora used by tests, the acceptance
//! suite, and the CLI's self-checks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::document::{
    parse_document, AnnotatedDocument, EntityMention, IngestOptions, Role, Sentence,
};

/// Interchange encoding of the five-sentence "Old Man and the Sea" excerpt.
pub const EXCERPT_JSONL: &str = include_str!("../fixtures/excerpt.jsonl");

pub fn excerpt_document() -> AnnotatedDocument {
    parse_document(EXCERPT_JSONL.trim(), 1, IngestOptions::default()).expect("fixture parses")
}

fn filler(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// A sentence of `len` tokens whose mentions sit at the given positions.
fn sentence_with(len: usize, placed: &[(usize, String, Role)]) -> Sentence {
    let mut tokens = filler("w", len);
    let mut mentions = Vec::with_capacity(placed.len());
    for (pos, entity, role) in placed {
        tokens[*pos] = entity.clone();
        mentions.push(EntityMention::new(entity.clone(), *role, *pos));
    }
    Sentence::new(tokens, mentions)
}

/// Strict chain: sentence `i` opens with the link it shares with `i - 1`
/// and closes with the link it shares with `i + 1`. No other sharing.
/// Every sentence holds exactly two entities.
pub fn chain_document(
    doc_id: &str,
    sentences: usize,
    tokens_per_sentence: usize,
) -> AnnotatedDocument {
    assert!(tokens_per_sentence >= 2);
    let last = tokens_per_sentence - 1;
    let out = (0..sentences)
        .map(|i| {
            let head = if i == 0 {
                format!("{doc_id}-open")
            } else {
                format!("{doc_id}-link{}", i - 1)
            };
            let tail = if i + 1 == sentences {
                format!("{doc_id}-close")
            } else {
                format!("{doc_id}-link{i}")
            };
            sentence_with(
                tokens_per_sentence,
                &[(0, head, Role::Subject), (last, tail, Role::Object)],
            )
        })
        .collect();
    AnnotatedDocument::new(doc_id, out)
}

/// Overlapping chain: sentence `i` mentions `e_i`, `e_{i+1}` and `e_{i+2}`,
/// so each entity runs through three consecutive sentences, moving from the
/// end of a sentence towards its start. Adjacent
/// sentences share two entities, sentences two apart share one, the rest
/// share none. Every sentence holds exactly three entities.
pub fn overlapping_chain_document(
    doc_id: &str,
    sentences: usize,
    tokens_per_sentence: usize,
) -> AnnotatedDocument {
    assert!(tokens_per_sentence >= 3);
    let mid = tokens_per_sentence / 2;
    let last = tokens_per_sentence - 1;
    let name = |j: usize| format!("{doc_id}-e{j}");
    let out = (0..sentences)
        .map(|i| {
            sentence_with(
                tokens_per_sentence,
                &[
                    (0, name(i), Role::Subject),
                    (mid, name(i + 1), Role::Object),
                    (last, name(i + 2), Role::Object),
                ],
            )
        })
        .collect();
    AnnotatedDocument::new(doc_id, out)
}

/// A document of random sentences drawing entities from a small vocabulary,
/// so that sentences overlap irregularly.
pub fn random_document<R: Rng>(
    rng: &mut R,
    doc_id: &str,
    sentences: usize,
    vocabulary: usize,
) -> AnnotatedDocument {
    let vocab: Vec<String> = (0..vocabulary).map(|v| format!("ent{v}")).collect();
    let out = (0..sentences)
        .map(|_| {
            let len = rng.gen_range(4..12);
            let mentions = rng.gen_range(0..=3.min(len));
            let mut positions: Vec<usize> = (0..len).collect();
            positions.shuffle(rng);
            let mut placed: Vec<(usize, String, Role)> = positions[..mentions]
                .iter()
                .map(|&p| {
                    let role = if rng.gen_bool(0.5) {
                        Role::Subject
                    } else {
                        Role::Object
                    };
                    (p, vocab[rng.gen_range(0..vocab.len())].clone(), role)
                })
                .collect();
            placed.sort_by_key(|p| p.0);
            sentence_with(len, &placed)
        })
        .collect();
    AnnotatedDocument::new(doc_id, out)
}

/// A document whose sentences share no entities at all.
pub fn scattered_document(
    doc_id: &str,
    sentences: usize,
    tokens_per_sentence: usize,
) -> AnnotatedDocument {
    let last = tokens_per_sentence - 1;
    let out = (0..sentences)
        .map(|i| {
            sentence_with(
                tokens_per_sentence,
                &[
                    (0, format!("{doc_id}-a{i}"), Role::Subject),
                    (last, format!("{doc_id}-b{i}"), Role::Object),
                ],
            )
        })
        .collect();
    AnnotatedDocument::new(doc_id, out)
}

/// "free domains, free domains, free domains": one repeated object entity,
/// each clause its own sentence.
pub fn spam_document() -> AnnotatedDocument {
    let clause = || {
        Sentence::new(
            ["free", "domains", ","],
            vec![EntityMention::new("domains", Role::Object, 1)],
        )
    };
    AnnotatedDocument::new("spam", vec![clause(), clause(), clause()])
}
