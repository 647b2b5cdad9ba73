//! Document coherence from discourse entities.
//!
//! Documents arrive as sentences with subject and object mentions
//! ([`document`]). They are turned into an entity grid ([`grid`]) and scored
//! either by the entropy of entity n-grams ([`entropy`]) or by topology
//! metrics of the sentence graph ([`graph`]). The scores drive a sentence
//! reordering evaluation ([`reorder`]) and the reranking of retrieval runs
//! ([`rerank`]).

pub mod document;
pub mod entropy;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod grid;
pub mod reorder;
pub mod rerank;
pub mod score;
pub mod scoring;

pub use document::{AnnotatedDocument, EntityMention, Role, Sentence, Token};
pub use entropy::EntropyMode;
pub use error::{Error, Result};
pub use graph::{GraphMetricConfig, Weighting};
pub use grid::EntityGrid;
pub use score::{CoherenceScore, ModelId, Polarity};
pub use scoring::{score_document, Scorer, ScoringConfig};
