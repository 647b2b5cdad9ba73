//! Sentence-entity graphs and the graph-based coherence metrics.
//!
//! The bipartite graph links each sentence to the entities it mentions. Its
//! projection is an undirected sentence graph with an edge wherever two
//! sentences share an entity; PageRank, clustering and betweenness run on
//! the projection. The topic-flow metrics (ATF, AWTF, nATF, nAWTF) and
//! entity distance read the grid and document directly.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::document::AnnotatedDocument;
use crate::grid::EntityGrid;
use crate::score::{CoherenceScore, ModelId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub doc_id: String,
    /// Sentence nodes are `0..sentence_count`, in document order.
    pub sentence_count: usize,
    pub entities: Vec<String>,
    /// `(sentence, entity index)` pairs.
    pub edges: Vec<(usize, usize)>,
}

pub fn build_bipartite(grid: &EntityGrid) -> BipartiteGraph {
    let edges = grid
        .rows()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&(c, _)| (i, c)))
        .collect();
    BipartiteGraph {
        doc_id: grid.doc_id.clone(),
        sentence_count: grid.sentence_count,
        entities: grid.columns.clone(),
        edges,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Every edge has weight 1.
    #[default]
    Unweighted,
    /// Number of shared entities.
    SharedCount,
    /// Shared entities divided by the sentence distance `v - u`.
    DistanceDiscounted,
}

impl Weighting {
    pub fn name(self) -> &'static str {
        match self {
            Weighting::Unweighted => "unweighted",
            Weighting::SharedCount => "shared",
            Weighting::DistanceDiscounted => "distance",
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unweighted" => Ok(Weighting::Unweighted),
            "shared" => Ok(Weighting::SharedCount),
            "distance" => Ok(Weighting::DistanceDiscounted),
            other => Err(format!("unknown weighting '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionGraph {
    pub doc_id: String,
    pub weighting: Weighting,
    /// Neighbor lists with edge weights, sorted by neighbor.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl ProjectionGraph {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.adjacency[u]
            .binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| self.adjacency[u][i].1)
    }

    /// Edges as `(u, v, weight)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| {
                nbrs.iter()
                    .filter(move |&&(v, _)| u < v)
                    .map(move |&(v, w)| (u, v, w))
            })
            .collect()
    }

    /// Writes one `u v weight` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, v, w) in self.edges() {
            writeln!(out, "{u} {v} {w:.6}")?;
        }
        Ok(())
    }
}

pub fn project(bg: &BipartiteGraph, weighting: Weighting) -> ProjectionGraph {
    let n = bg.sentence_count;
    let mut sentences_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(s, e) in &bg.edges {
        sentences_of.entry(e).or_default().push(s);
    }
    let mut shared: HashMap<(usize, usize), usize> = HashMap::new();
    for sents in sentences_of.values_mut() {
        sents.sort_unstable();
        sents.dedup();
        for (a, &u) in sents.iter().enumerate() {
            for &v in &sents[a + 1..] {
                *shared.entry((u, v)).or_insert(0) += 1;
            }
        }
    }
    let mut adjacency = vec![Vec::new(); n];
    for (&(u, v), &count) in &shared {
        let w = match weighting {
            Weighting::Unweighted => 1.0,
            Weighting::SharedCount => count as f64,
            Weighting::DistanceDiscounted => count as f64 / (v - u) as f64,
        };
        adjacency[u].push((v, w));
        adjacency[v].push((u, w));
    }
    for nbrs in &mut adjacency {
        nbrs.sort_by_key(|&(v, _)| v);
    }
    ProjectionGraph {
        doc_id: bg.doc_id.clone(),
        weighting,
        adjacency,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphMetricConfig {
    /// Damping factor `c` in (0, 1).
    pub damping: f64,
    pub pagerank_epsilon: f64,
    pub pagerank_max_iters: usize,
    pub weighting: Weighting,
}

impl Default for GraphMetricConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            pagerank_epsilon: 1e-10,
            pagerank_max_iters: 200,
            weighting: Weighting::Unweighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRank {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// One application of `PR(v) = c * Σ_u PR(u) w(u,v) / W(u) + (1 - c)`,
/// where `W(u)` is the total weight incident on `u`.
pub fn pagerank_step(g: &ProjectionGraph, damping: f64, pr: &[f64]) -> Vec<f64> {
    let n = g.node_count();
    let strength: Vec<f64> = (0..n)
        .map(|u| g.neighbors(u).iter().map(|&(_, w)| w).sum())
        .collect();
    (0..n)
        .map(|v| {
            let inflow: f64 = g
                .neighbors(v)
                .iter()
                .map(|&(u, w)| pr[u] * w / strength[u])
                .sum();
            damping * inflow + (1.0 - damping)
        })
        .collect()
}

/// Power iteration from the all-ones vector. The teleport term is `1 - c`
/// per node, without division by the node count.
pub fn pagerank(g: &ProjectionGraph, cfg: &GraphMetricConfig) -> PageRank {
    let mut pr = vec![1.0; g.node_count()];
    for it in 1..=cfg.pagerank_max_iters {
        let next = pagerank_step(g, cfg.damping, &pr);
        let change = pr
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pr = next;
        if change < cfg.pagerank_epsilon {
            return PageRank {
                values: pr,
                iterations: it,
                converged: true,
            };
        }
    }
    PageRank {
        values: pr,
        iterations: cfg.pagerank_max_iters,
        converged: false,
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn pagerank_median(g: &ProjectionGraph, cfg: &GraphMetricConfig) -> CoherenceScore {
    if g.node_count() == 0 {
        return CoherenceScore::undefined(ModelId::PageRank);
    }
    let pr = pagerank(g, cfg);
    if !pr.converged {
        log::warn!(
            "{}: PageRank stopped after {} iterations without converging",
            g.doc_id,
            pr.iterations
        );
    }
    CoherenceScore::defined(ModelId::PageRank, median(&pr.values))
}

/// Local clustering coefficient of each node on the unweighted skeleton.
/// Nodes of degree below two get 0.
pub fn local_clustering(g: &ProjectionGraph) -> Vec<f64> {
    (0..g.node_count())
        .map(|u| {
            let nbrs = g.neighbors(u);
            let d = nbrs.len();
            if d < 2 {
                return 0.0;
            }
            let mut closed = 0usize;
            for (i, &(a, _)) in nbrs.iter().enumerate() {
                for &(b, _) in &nbrs[i + 1..] {
                    if g.weight(a, b).is_some() {
                        closed += 1;
                    }
                }
            }
            closed as f64 / (d * (d - 1) / 2) as f64
        })
        .collect()
}

pub fn clustering_coefficient(g: &ProjectionGraph) -> CoherenceScore {
    let n = g.node_count();
    if n == 0 {
        return CoherenceScore::undefined(ModelId::ClusteringCoef);
    }
    let total: f64 = local_clustering(g).iter().sum();
    CoherenceScore::defined(ModelId::ClusteringCoef, total / n as f64)
}

/// Edge length used for shortest paths: hop count when unweighted,
/// reciprocal weight otherwise.
fn edge_length(weighting: Weighting, w: f64) -> f64 {
    match weighting {
        Weighting::Unweighted => 1.0,
        _ => 1.0 / w,
    }
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * 1.0_f64.max(a.abs()).max(b.abs())
}

/// Node betweenness summed over ordered source/target pairs (Brandes).
/// Endpoints are excluded; unreachable pairs contribute nothing.
pub fn betweenness(g: &ProjectionGraph) -> Vec<f64> {
    let n = g.node_count();
    let mut centrality = vec![0.0; n];
    for s in 0..n {
        let mut dist = vec![f64::INFINITY; n];
        let mut sigma = vec![0.0f64; n];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut settled = vec![false; n];
        let mut order = Vec::with_capacity(n);
        dist[s] = 0.0;
        sigma[s] = 1.0;

        // Dense Dijkstra; projection graphs are small.
        loop {
            let next = (0..n)
                .filter(|&v| !settled[v] && dist[v].is_finite())
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]));
            let Some(v) = next else { break };
            settled[v] = true;
            order.push(v);
            for &(w, weight) in g.neighbors(v) {
                if settled[w] {
                    continue;
                }
                let alt = dist[v] + edge_length(g.weighting, weight);
                if dist[w].is_finite() && same_length(alt, dist[w]) {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                } else if alt < dist[w] {
                    dist[w] = alt;
                    sigma[w] = sigma[v];
                    preds[w] = vec![v];
                }
            }
        }

        let mut delta = vec![0.0; n];
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    centrality
}

pub fn avg_betweenness(g: &ProjectionGraph) -> CoherenceScore {
    let n = g.node_count();
    if n == 0 {
        return CoherenceScore::undefined(ModelId::Betweenness);
    }
    let total: f64 = betweenness(g).iter().sum();
    CoherenceScore::defined(ModelId::Betweenness, total / n as f64)
}

/// Inverse of the per-sentence average gap, in tokens, between consecutive
/// occurrences of every entity that appears in at least two sentences. An
/// entity's occurrence in a sentence is its first head token there.
pub fn entity_distance(doc: &AnnotatedDocument) -> CoherenceScore {
    let mut occurrences: HashMap<&str, Vec<usize>> = HashMap::new();
    for sentence in &doc.sentences {
        let mut seen: Vec<&str> = Vec::new();
        for m in &sentence.mentions {
            if seen.contains(&m.entity_id.as_str()) {
                continue;
            }
            seen.push(&m.entity_id);
            occurrences
                .entry(&m.entity_id)
                .or_default()
                .push(sentence.tokens[m.token_index].doc_offset);
        }
    }
    let mut entities: Vec<_> = occurrences
        .into_iter()
        .filter(|(_, o)| o.len() >= 2)
        .collect();
    if entities.is_empty() {
        return CoherenceScore::undefined(ModelId::EntityDistance);
    }
    entities.sort_by(|a, b| a.0.cmp(b.0));
    let total: usize = entities
        .iter_mut()
        .map(|(_, offsets)| {
            offsets.sort_unstable();
            offsets.windows(2).map(|w| w[1] - w[0]).sum::<usize>()
        })
        .sum();
    if total == 0 {
        return CoherenceScore::undefined(ModelId::EntityDistance);
    }
    let average = total as f64 / doc.sentence_count() as f64;
    CoherenceScore::defined(ModelId::EntityDistance, 1.0 / average)
}

fn union_and_intersection(a: &[usize], b: &[usize]) -> (usize, usize) {
    let shared = a.iter().filter(|x| b.binary_search(x).is_ok()).count();
    (a.len() + b.len() - shared, shared)
}

/// Mean over adjacent sentence pairs of `1 / |union of entity sets|`.
/// Pairs with no entities contribute 0.
pub fn atf(grid: &EntityGrid) -> CoherenceScore {
    let n = grid.sentence_count;
    if n < 2 {
        return CoherenceScore::undefined(ModelId::Atf);
    }
    let sets = grid.row_column_sets();
    let sum: f64 = sets
        .windows(2)
        .map(|p| match union_and_intersection(&p[0], &p[1]).0 {
            0 => 0.0,
            union => 1.0 / union as f64,
        })
        .sum();
    CoherenceScore::defined(ModelId::Atf, sum / (n - 1) as f64)
}

/// Mean over adjacent sentence pairs of the number of shared entities.
pub fn awtf(grid: &EntityGrid) -> CoherenceScore {
    let n = grid.sentence_count;
    if n < 2 {
        return CoherenceScore::undefined(ModelId::Awtf);
    }
    let sets = grid.row_column_sets();
    let sum: usize = sets
        .windows(2)
        .map(|p| union_and_intersection(&p[0], &p[1]).1)
        .sum();
    CoherenceScore::defined(ModelId::Awtf, sum as f64 / (n - 1) as f64)
}

/// Number of entities occurring in at least two sentences.
pub fn shared_entity_count(grid: &EntityGrid) -> usize {
    grid.column_sentence_counts()
        .into_iter()
        .filter(|&c| c >= 2)
        .count()
}

fn for_each_pair(grid: &EntityGrid, mut f: impl FnMut(usize, usize)) {
    let sets = grid.row_column_sets();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let (u, s) = union_and_intersection(&sets[i], &sets[j]);
            f(u, s);
        }
    }
}

/// Sum over all sentence pairs `i < j` of `1 / |union|`, divided by the
/// number of shared entities. Undefined when no entity is shared.
pub fn natf(grid: &EntityGrid) -> CoherenceScore {
    let shared = shared_entity_count(grid);
    if shared == 0 {
        return CoherenceScore::undefined(ModelId::Natf);
    }
    let mut sum = 0.0;
    for_each_pair(grid, |union, _| {
        if union > 0 {
            sum += 1.0 / union as f64;
        }
    });
    CoherenceScore::defined(ModelId::Natf, sum / shared as f64)
}

/// Number of sentence pairs `i < j` sharing an entity, divided by the
/// number of shared entities; 0 when no entity is shared.
pub fn nawtf(grid: &EntityGrid) -> CoherenceScore {
    let shared = shared_entity_count(grid);
    if shared == 0 {
        return CoherenceScore::defined(ModelId::Nawtf, 0.0);
    }
    let mut linked = 0usize;
    for_each_pair(grid, |_, inter| {
        if inter > 0 {
            linked += 1;
        }
    });
    CoherenceScore::defined(ModelId::Nawtf, linked as f64 / shared as f64)
}
