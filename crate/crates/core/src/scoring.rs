//! Dispatch from a model id to the metric that implements it.

use crate::document::AnnotatedDocument;
use crate::entropy::{entropy_coherence, EntropyMode};
use crate::graph::{self, build_bipartite, project, GraphMetricConfig};
use crate::grid::{build_grid, EntityGrid};
use crate::score::{CoherenceScore, ModelId};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoringConfig {
    pub entropy_mode: EntropyMode,
    pub graph: GraphMetricConfig,
}

/// A document with its grid built once, for scoring under several models.
pub struct Scorer<'a> {
    doc: &'a AnnotatedDocument,
    grid: EntityGrid,
}

impl<'a> Scorer<'a> {
    pub fn new(doc: &'a AnnotatedDocument) -> Self {
        Self {
            doc,
            grid: build_grid(doc),
        }
    }

    pub fn grid(&self) -> &EntityGrid {
        &self.grid
    }

    pub fn score(&self, model: ModelId, cfg: &ScoringConfig) -> CoherenceScore {
        if let Some(k) = model.entropy_order() {
            return entropy_coherence(&self.grid, k, cfg.entropy_mode);
        }
        let projection = || project(&build_bipartite(&self.grid), cfg.graph.weighting);
        match model {
            ModelId::PageRank => graph::pagerank_median(&projection(), &cfg.graph),
            ModelId::ClusteringCoef => graph::clustering_coefficient(&projection()),
            ModelId::Betweenness => graph::avg_betweenness(&projection()),
            ModelId::EntityDistance => graph::entity_distance(self.doc),
            ModelId::Atf => graph::atf(&self.grid),
            ModelId::Awtf => graph::awtf(&self.grid),
            ModelId::Natf => graph::natf(&self.grid),
            ModelId::Nawtf => graph::nawtf(&self.grid),
            ModelId::Entropy0 | ModelId::Entropy1 | ModelId::Entropy2 => unreachable!(),
        }
    }
}

pub fn score_document(
    doc: &AnnotatedDocument,
    model: ModelId,
    cfg: &ScoringConfig,
) -> CoherenceScore {
    Scorer::new(doc).score(model, cfg)
}
