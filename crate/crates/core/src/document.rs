//! Annotated documents and the JSON Lines interchange format.
//!
//! One document per line:
//!
//! ```text
//! {"doc_id": "d1", "sentences": [{"tokens": ["the", "cat", "sat"],
//!   "mentions": [{"entity": "cat", "role": "s", "token_index": 1}]}]}
//! ```
//!
//! Only subject (`s`) and object (`o`) mentions are kept; other roles are
//! dropped at ingestion. Unknown fields are ignored.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Syntactic role of a discourse entity within a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Subject,
    Object,
}

impl Role {
    pub fn code(self) -> &'static str {
        match self {
            Role::Subject => "s",
            Role::Object => "o",
        }
    }

    pub fn from_code(code: &str) -> Option<Role> {
        match code {
            "s" | "S" => Some(Role::Subject),
            "o" | "O" => Some(Role::Object),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    /// 0-based term index within the whole document.
    pub doc_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMention {
    pub entity_id: String,
    pub role: Role,
    /// Index of the head token within its sentence.
    pub token_index: usize,
}

impl EntityMention {
    pub fn new(entity_id: impl Into<String>, role: Role, token_index: usize) -> Self {
        Self {
            entity_id: entity_id.into(),
            role,
            token_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index: usize,
    pub tokens: Vec<Token>,
    /// Ordered by `token_index`.
    pub mentions: Vec<EntityMention>,
}

impl Sentence {
    /// Builds a detached sentence. Index and offsets are assigned when the
    /// sentence is placed into a document.
    pub fn new<S: Into<String>>(
        tokens: impl IntoIterator<Item = S>,
        mut mentions: Vec<EntityMention>,
    ) -> Self {
        mentions.sort_by_key(|m| m.token_index);
        Self {
            index: 0,
            tokens: tokens
                .into_iter()
                .map(|surface| Token {
                    surface: surface.into(),
                    doc_offset: 0,
                })
                .collect(),
            mentions,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
}

impl AnnotatedDocument {
    /// Places `sentences` into a document, assigning contiguous sentence
    /// indices and document-wide token offsets.
    pub fn new(doc_id: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        let mut doc = Self {
            doc_id: doc_id.into(),
            sentences,
        };
        doc.reindex();
        doc
    }

    fn reindex(&mut self) {
        let mut offset = 0;
        for (i, sentence) in self.sentences.iter_mut().enumerate() {
            sentence.index = i;
            for token in &mut sentence.tokens {
                token.doc_offset = offset;
                offset += 1;
            }
        }
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn mention_count(&self) -> usize {
        self.sentences.iter().map(|s| s.mentions.len()).sum()
    }

    /// Returns a copy with sentences arranged so that new position `i` holds
    /// original sentence `order[i]`. `order` must be a permutation of
    /// `0..sentence_count()`.
    pub fn reordered(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.sentences.len(), "order length mismatch");
        let sentences = order.iter().map(|&i| self.sentences[i].clone()).collect();
        Self::new(self.doc_id.clone(), sentences)
    }

    /// Checks the structural invariants that ingestion guarantees.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.doc_id.is_empty() {
            return Err("doc_id is empty".into());
        }
        let mut expected_offset = 0;
        for (i, sentence) in self.sentences.iter().enumerate() {
            if sentence.index != i {
                return Err(format!("sentence {i} carries index {}", sentence.index));
            }
            for token in &sentence.tokens {
                if token.doc_offset != expected_offset {
                    return Err(format!(
                        "sentence {i}: token offset {} where {expected_offset} expected",
                        token.doc_offset
                    ));
                }
                expected_offset += 1;
            }
            let mut last = 0;
            for m in &sentence.mentions {
                if m.token_index >= sentence.tokens.len() {
                    return Err(format!(
                        "sentence {i}: mention '{}' points at token {} of {}",
                        m.entity_id,
                        m.token_index,
                        sentence.tokens.len()
                    ));
                }
                if m.token_index < last {
                    return Err(format!("sentence {i}: mentions out of token order"));
                }
                last = m.token_index;
            }
        }
        Ok(())
    }
}

/// Keeps the first `max_terms` tokens of every sentence and drops mentions
/// whose head falls outside the kept span. Offsets are recomputed.
pub fn truncate_sentences(doc: &AnnotatedDocument, max_terms: usize) -> AnnotatedDocument {
    let sentences = doc
        .sentences
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.tokens.truncate(max_terms);
            s.mentions.retain(|m| m.token_index < max_terms);
            s
        })
        .collect();
    AnnotatedDocument::new(doc.doc_id.clone(), sentences)
}

pub const DEFAULT_MAX_TERMS: usize = 60;

/// Ingestion options for entity keys.
#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Strip a trailing plural `s` from entity keys so that "cats" and
    /// "cat" share a column.
    pub strip_plural: bool,
}

pub fn normalize_entity(raw: &str, opts: IngestOptions) -> String {
    let lower = raw.trim().to_lowercase();
    if opts.strip_plural {
        strip_plural(&lower).to_string()
    } else {
        lower
    }
}

fn strip_plural(word: &str) -> &str {
    if word.len() > 3 && word.ends_with('s') && !word.ends_with("ss") {
        &word[..word.len() - 1]
    } else {
        word
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDocument {
    doc_id: String,
    #[serde(default)]
    sentences: Vec<RawSentence>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSentence {
    #[serde(default)]
    tokens: Vec<String>,
    #[serde(default)]
    mentions: Vec<RawMention>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawMention {
    entity: String,
    role: String,
    token_index: usize,
}

/// Parses one interchange line. `line` is used for error reporting only.
pub fn parse_document(json: &str, line: usize, opts: IngestOptions) -> Result<AnnotatedDocument> {
    let raw: RawDocument =
        serde_json::from_str(json).map_err(|source| Error::Json { line, source })?;
    let invalid = |reason: String| Error::InvalidDocument { line, reason };
    if raw.doc_id.is_empty() {
        return Err(invalid("doc_id is empty".into()));
    }
    let mut sentences = Vec::with_capacity(raw.sentences.len());
    for (si, rs) in raw.sentences.into_iter().enumerate() {
        let mut mentions = Vec::with_capacity(rs.mentions.len());
        for rm in rs.mentions {
            if rm.token_index >= rs.tokens.len() {
                return Err(invalid(format!(
                    "sentence {si}: mention '{}' token_index {} out of range ({} tokens)",
                    rm.entity,
                    rm.token_index,
                    rs.tokens.len()
                )));
            }
            let Some(role) = Role::from_code(&rm.role) else {
                continue;
            };
            let entity_id = normalize_entity(&rm.entity, opts);
            if entity_id.is_empty() {
                return Err(invalid(format!("sentence {si}: empty entity key")));
            }
            mentions.push(EntityMention::new(entity_id, role, rm.token_index));
        }
        sentences.push(Sentence::new(rs.tokens, mentions));
    }
    Ok(AnnotatedDocument::new(raw.doc_id, sentences))
}

/// Reads a whole JSON Lines corpus. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R, opts: IngestOptions) -> Result<Vec<AnnotatedDocument>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(parse_document(&line, i + 1, opts)?);
    }
    Ok(docs)
}

pub fn to_json_line(doc: &AnnotatedDocument) -> String {
    let raw = RawDocument {
        doc_id: doc.doc_id.clone(),
        sentences: doc
            .sentences
            .iter()
            .map(|s| RawSentence {
                tokens: s.tokens.iter().map(|t| t.surface.clone()).collect(),
                mentions: s
                    .mentions
                    .iter()
                    .map(|m| RawMention {
                        entity: m.entity_id.clone(),
                        role: m.role.code().to_string(),
                        token_index: m.token_index,
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string(&raw).expect("document serializes")
}

pub fn write_corpus<W: Write>(mut writer: W, docs: &[AnnotatedDocument]) -> Result<()> {
    for doc in docs {
        writeln!(writer, "{}", to_json_line(doc))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn truncates_long_sentence_and_drops_late_mentions() {
        let s = Sentence::new(
            words(70),
            vec![
                EntityMention::new("a", Role::Subject, 3),
                EntityMention::new("b", Role::Object, 61),
                EntityMention::new("c", Role::Object, 65),
            ],
        );
        let doc = AnnotatedDocument::new("d", vec![s]);
        let cut = truncate_sentences(&doc, DEFAULT_MAX_TERMS);
        assert_eq!(cut.sentences[0].len(), 60);
        let ids: Vec<_> = cut.sentences[0]
            .mentions
            .iter()
            .map(|m| m.entity_id.as_str())
            .collect();
        assert_eq!(ids, ["a"]);
    }

    #[test]
    fn short_sentence_is_untouched() {
        let s = Sentence::new(words(5), vec![EntityMention::new("a", Role::Subject, 4)]);
        let doc = AnnotatedDocument::new("d", vec![s]);
        assert_eq!(truncate_sentences(&doc, 60), doc);
    }

    #[test]
    fn boundary_mentions_match_naive_filter() {
        let mentions = vec![
            EntityMention::new("keep", Role::Subject, 59),
            EntityMention::new("drop", Role::Object, 60),
        ];
        let doc = AnnotatedDocument::new("d", vec![Sentence::new(words(80), mentions.clone())]);
        let cut = truncate_sentences(&doc, 60);
        let naive: Vec<_> = mentions
            .into_iter()
            .filter(|m| m.token_index < 60)
            .collect();
        assert_eq!(cut.sentences[0].mentions, naive);
    }

    #[test]
    fn truncation_recomputes_offsets() {
        let doc = AnnotatedDocument::new(
            "d",
            vec![
                Sentence::new(words(70), vec![]),
                Sentence::new(words(3), vec![]),
            ],
        );
        let cut = truncate_sentences(&doc, 60);
        assert_eq!(cut.sentences[1].tokens[0].doc_offset, 60);
        assert!(cut.validate().is_ok());
    }

    #[test]
    fn parses_interchange_line_and_ignores_other_roles() {
        let line = r#"{"doc_id":"d1","extra":1,"sentences":[{"tokens":["The","Cats","sat","down"],
            "mentions":[{"entity":"Cats","role":"s","token_index":1},{"entity":"down","role":"x","token_index":3}]}]}"#;
        let doc = parse_document(line, 1, IngestOptions::default()).unwrap();
        assert_eq!(
            doc.sentences[0].mentions,
            vec![EntityMention::new("cats", Role::Subject, 1)]
        );
        let stripped = parse_document(line, 1, IngestOptions { strip_plural: true }).unwrap();
        assert_eq!(stripped.sentences[0].mentions[0].entity_id, "cat");
    }

    #[test]
    fn rejects_bad_token_index_with_line_number() {
        let line = r#"{"doc_id":"d1","sentences":[{"tokens":["a"],"mentions":[{"entity":"a","role":"s","token_index":4}]}]}"#;
        match parse_document(line, 7, IngestOptions::default()) {
            Err(Error::InvalidDocument { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_document("{not json", 3, IngestOptions::default()),
            Err(Error::Json { line: 3, .. })
        ));
        assert!(parse_document(
            r#"{"doc_id":"","sentences":[]}"#,
            1,
            IngestOptions::default()
        )
        .is_err());
    }

    #[test]
    fn json_line_round_trips() {
        let line = r#"{"doc_id":"d1","sentences":[{"tokens":["a","b"],"mentions":[{"entity":"b","role":"o","token_index":1}]},{"tokens":[],"mentions":[]}]}"#;
        let doc = parse_document(line, 1, IngestOptions::default()).unwrap();
        let again = parse_document(&to_json_line(&doc), 1, IngestOptions::default()).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn reordered_recomputes_indices_and_offsets() {
        let doc = AnnotatedDocument::new(
            "d",
            vec![
                Sentence::new(words(2), vec![]),
                Sentence::new(words(3), vec![]),
            ],
        );
        let r = doc.reordered(&[1, 0]);
        assert_eq!(r.sentences[0].len(), 3);
        assert_eq!(r.sentences[1].tokens[0].doc_offset, 3);
        assert!(r.validate().is_ok());
    }
}
