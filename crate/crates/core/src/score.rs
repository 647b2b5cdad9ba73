//! Coherence scores, model identities and collection normalization.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Whether larger raw values mean a more coherent document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    HigherIsMoreCoherent,
    LowerIsMoreCoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    Entropy0,
    Entropy1,
    Entropy2,
    PageRank,
    ClusteringCoef,
    Betweenness,
    EntityDistance,
    Atf,
    Awtf,
    Natf,
    Nawtf,
}

impl ModelId {
    pub const GRAPH: [ModelId; 8] = [
        ModelId::PageRank,
        ModelId::ClusteringCoef,
        ModelId::Betweenness,
        ModelId::EntityDistance,
        ModelId::Atf,
        ModelId::Awtf,
        ModelId::Natf,
        ModelId::Nawtf,
    ];

    pub fn entropy(order_k: usize) -> Option<ModelId> {
        match order_k {
            0 => Some(ModelId::Entropy0),
            1 => Some(ModelId::Entropy1),
            2 => Some(ModelId::Entropy2),
            _ => None,
        }
    }

    /// Markov order of an entropy model.
    pub fn entropy_order(self) -> Option<usize> {
        match self {
            ModelId::Entropy0 => Some(0),
            ModelId::Entropy1 => Some(1),
            ModelId::Entropy2 => Some(2),
            _ => None,
        }
    }

    pub fn polarity(self) -> Polarity {
        match self {
            ModelId::PageRank | ModelId::ClusteringCoef => Polarity::LowerIsMoreCoherent,
            _ => Polarity::HigherIsMoreCoherent,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Entropy0 => "entropy0",
            ModelId::Entropy1 => "entropy1",
            ModelId::Entropy2 => "entropy2",
            ModelId::PageRank => "pagerank",
            ModelId::ClusteringCoef => "clustering",
            ModelId::Betweenness => "betweenness",
            ModelId::EntityDistance => "entity-distance",
            ModelId::Atf => "atf",
            ModelId::Awtf => "awtf",
            ModelId::Natf => "natf",
            ModelId::Nawtf => "nawtf",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let id = match s.to_ascii_lowercase().as_str() {
            "entropy0" => ModelId::Entropy0,
            "entropy1" => ModelId::Entropy1,
            "entropy2" => ModelId::Entropy2,
            "pagerank" | "pr" => ModelId::PageRank,
            "clustering" | "cc" => ModelId::ClusteringCoef,
            "betweenness" | "bw" => ModelId::Betweenness,
            "entity-distance" | "ed" => ModelId::EntityDistance,
            "atf" => ModelId::Atf,
            "awtf" => ModelId::Awtf,
            "natf" => ModelId::Natf,
            "nawtf" => ModelId::Nawtf,
            other => return Err(format!("unknown model '{other}'")),
        };
        Ok(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceScore {
    pub model: ModelId,
    pub raw: f64,
    /// False when the model has nothing to measure on this document.
    pub defined: bool,
}

impl CoherenceScore {
    pub fn defined(model: ModelId, raw: f64) -> Self {
        Self {
            model,
            raw,
            defined: true,
        }
    }

    pub fn undefined(model: ModelId) -> Self {
        Self {
            model,
            raw: 0.0,
            defined: false,
        }
    }

    pub fn polarity(&self) -> Polarity {
        self.model.polarity()
    }

    /// Raw value flipped so that larger always means more coherent.
    /// `None` for undefined scores.
    pub fn oriented(&self) -> Option<f64> {
        if !self.defined {
            return None;
        }
        Some(match self.polarity() {
            Polarity::HigherIsMoreCoherent => self.raw,
            Polarity::LowerIsMoreCoherent => -self.raw,
        })
    }
}

/// Relative tolerance under which two oriented scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Compares by coherence: `Greater` means `a` is more coherent than `b`.
/// Undefined scores rank below every defined one; values within
/// [`TIE_TOLERANCE`] are equal.
pub fn compare_coherence(a: &CoherenceScore, b: &CoherenceScore) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match (a.oriented(), b.oriented()) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => {
            let scale = 1.0_f64.max(x.abs()).max(y.abs());
            if (x - y).abs() <= TIE_TOLERANCE * scale {
                Ordering::Equal
            } else if x > y {
                Ordering::Greater
            } else {
                Ordering::Less
            }
        }
    }
}

/// Divides every raw value by the collection maximum for its model.
/// Undefined scores map to 0, as do all scores of a model whose maximum is
/// not positive.
pub fn normalize_collection(scores: &[CoherenceScore]) -> Vec<f64> {
    let mut max_by_model: HashMap<ModelId, f64> = HashMap::new();
    for s in scores.iter().filter(|s| s.defined) {
        let m = max_by_model.entry(s.model).or_insert(f64::NEG_INFINITY);
        *m = m.max(s.raw);
    }
    scores
        .iter()
        .map(|s| match max_by_model.get(&s.model) {
            Some(&max) if s.defined && max > 0.0 => s.raw / max,
            _ => 0.0,
        })
        .collect()
}
