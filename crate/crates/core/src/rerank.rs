//! TREC run and qrels handling, coherence reranking, and the evaluation
//! measures MRR, P@k, MAP and ERR@k.
//!
//! Reranking mixes per-query min-max normalized retrieval scores with
//! per-query min-max normalized, polarity-oriented coherence:
//!
//! `score = alpha * rsv_norm + (1 - alpha) * coh_norm`

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::score::CoherenceScore;

pub const RERANK_TAG: &str = "coh-rerank";

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    pub rank: usize,
    pub rsv: f64,
    pub tag: String,
}

/// Per-query ranked lists, each ordered by rank `1..=n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedRun {
    queries: BTreeMap<String, Vec<RunEntry>>,
}

impl RankedRun {
    /// Groups entries by query, sorts them by rank, and checks that ranks
    /// run `1..=n` with non-increasing scores and no repeated documents.
    pub fn from_entries(entries: Vec<RunEntry>) -> Result<Self> {
        let mut queries: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
        let mut seen: HashSet<(String, String)> = HashSet::new();
        for e in entries {
            if !seen.insert((e.query_id.clone(), e.doc_id.clone())) {
                return Err(Error::Duplicate {
                    query_id: e.query_id,
                    doc_id: e.doc_id,
                });
            }
            queries.entry(e.query_id.clone()).or_default().push(e);
        }
        for (qid, list) in &mut queries {
            list.sort_by_key(|e| e.rank);
            for (i, e) in list.iter().enumerate() {
                if e.rank != i + 1 {
                    return Err(Error::InvalidRanking {
                        query_id: qid.clone(),
                        reason: format!("expected rank {} but found {}", i + 1, e.rank),
                    });
                }
            }
            if let Some(w) = list.windows(2).find(|w| w[1].rsv > w[0].rsv) {
                return Err(Error::InvalidRanking {
                    query_id: qid.clone(),
                    reason: format!("score rises from rank {} to rank {}", w[0].rank, w[1].rank),
                });
            }
        }
        Ok(Self { queries })
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    pub fn query(&self, query_id: &str) -> Option<&[RunEntry]> {
        self.queries.get(query_id).map(Vec::as_slice)
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &[RunEntry])> {
        self.queries.iter().map(|(q, l)| (q.as_str(), l.as_slice()))
    }

    pub fn entries(&self) -> impl Iterator<Item = &RunEntry> {
        self.queries.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.queries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Document ids per query in rank order.
    pub fn ordering(&self) -> BTreeMap<&str, Vec<&str>> {
        self.queries
            .iter()
            .map(|(q, l)| (q.as_str(), l.iter().map(|e| e.doc_id.as_str()).collect()))
            .collect()
    }
}

fn malformed(kind: &'static str, line: usize, reason: impl Into<String>) -> Error {
    Error::Malformed {
        kind,
        line,
        reason: reason.into(),
    }
}

/// Parses a six-column TREC run: `qid Q0 docid rank score tag`.
pub fn parse_run<R: BufRead>(reader: R) -> Result<RankedRun> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(malformed(
                "run",
                lineno,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let rank = fields[3]
            .parse()
            .map_err(|_| malformed("run", lineno, format!("bad rank '{}'", fields[3])))?;
        let rsv: f64 = fields[4]
            .parse()
            .map_err(|_| malformed("run", lineno, format!("bad score '{}'", fields[4])))?;
        if !rsv.is_finite() {
            return Err(malformed("run", lineno, "score is not finite"));
        }
        entries.push(RunEntry {
            query_id: fields[0].to_string(),
            doc_id: fields[2].to_string(),
            rank,
            rsv,
            tag: fields[5].to_string(),
        });
    }
    if entries.is_empty() {
        log::warn!("run file holds no entries");
    }
    RankedRun::from_entries(entries)
}

pub fn write_run<W: Write>(mut out: W, run: &RankedRun) -> std::io::Result<()> {
    for e in run.entries() {
        writeln!(
            out,
            "{} Q0 {} {} {:.6} {}",
            e.query_id, e.doc_id, e.rank, e.rsv, e.tag
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Qrels {
    judgments: HashMap<String, HashMap<String, u32>>,
    max_grade: u32,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> Result<()> {
        let q = self.judgments.entry(query_id.to_string()).or_default();
        if q.insert(doc_id.to_string(), grade).is_some() {
            return Err(Error::Duplicate {
                query_id: query_id.into(),
                doc_id: doc_id.into(),
            });
        }
        self.max_grade = self.max_grade.max(grade);
        Ok(())
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> u32 {
        self.judgments
            .get(query_id)
            .and_then(|q| q.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.judgments.contains_key(query_id)
    }

    /// Documents judged relevant (grade >= 1) for a query.
    pub fn relevant_count(&self, query_id: &str) -> usize {
        self.judgments
            .get(query_id)
            .map_or(0, |q| q.values().filter(|&&g| g >= 1).count())
    }

    /// Largest grade seen, at least 1.
    pub fn max_grade(&self) -> u32 {
        self.max_grade.max(1)
    }
}

/// Parses four-column TREC qrels: `qid iter docid grade`. Negative grades
/// (e.g. spam labels) are read as 0.
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    let mut negative = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(malformed(
                "qrels",
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let grade: i64 = fields[3]
            .parse()
            .map_err(|_| malformed("qrels", lineno, format!("bad grade '{}'", fields[3])))?;
        if grade < 0 {
            negative += 1;
        }
        let grade = u32::try_from(grade.max(0))
            .map_err(|_| malformed("qrels", lineno, "grade out of range"))?;
        qrels.insert(fields[0], fields[2], grade)?;
    }
    if negative > 0 {
        log::warn!("{negative} negative qrels grade(s) read as 0");
    }
    Ok(qrels)
}

fn min_max(values: &[Option<f64>], degenerate: f64) -> Vec<f64> {
    let defined = values.iter().flatten();
    let lo = defined.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = defined.copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|v| match v {
            None => 0.0,
            Some(_) if hi <= lo => degenerate,
            Some(x) => (x - lo) / (hi - lo),
        })
        .collect()
}

/// Reranks every query. Documents without a coherence score, or with an
/// undefined one, get a normalized coherence of 0. Ties keep the baseline
/// order, so `alpha = 1` returns the baseline ranking unchanged.
pub fn rerank(
    run: &RankedRun,
    coherence: &HashMap<String, CoherenceScore>,
    alpha: f64,
) -> Result<RankedRun> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} outside [0, 1]"
        )));
    }
    let mut queries = BTreeMap::new();
    for (qid, list) in &run.queries {
        let rsv: Vec<Option<f64>> = list.iter().map(|e| Some(e.rsv)).collect();
        let coh: Vec<Option<f64>> = list
            .iter()
            .map(|e| coherence.get(&e.doc_id).and_then(CoherenceScore::oriented))
            .collect();
        let rsv_norm = min_max(&rsv, 0.0);
        let coh_norm = min_max(&coh, 1.0);
        let mut scored: Vec<(f64, &RunEntry)> = list
            .iter()
            .enumerate()
            .map(|(i, e)| (alpha * rsv_norm[i] + (1.0 - alpha) * coh_norm[i], e))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let reranked = scored
            .into_iter()
            .enumerate()
            .map(|(i, (score, e))| RunEntry {
                query_id: e.query_id.clone(),
                doc_id: e.doc_id.clone(),
                rank: i + 1,
                rsv: score,
                tag: RERANK_TAG.to_string(),
            })
            .collect();
        queries.insert(qid.clone(), reranked);
    }
    Ok(RankedRun { queries })
}

pub fn reciprocal_rank(list: &[RunEntry], qrels: &Qrels) -> f64 {
    list.iter()
        .position(|e| qrels.grade(&e.query_id, &e.doc_id) >= 1)
        .map_or(0.0, |p| 1.0 / (p + 1) as f64)
}

/// Relevant documents in the top `k`, divided by `k`.
pub fn precision(list: &[RunEntry], qrels: &Qrels, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = list
        .iter()
        .take(k)
        .filter(|e| qrels.grade(&e.query_id, &e.doc_id) >= 1)
        .count();
    hits as f64 / k as f64
}

/// Average precision over the top `depth` results, normalized by every
/// relevant document in the judgments.
pub fn average_precision(list: &[RunEntry], qrels: &Qrels, depth: usize) -> f64 {
    let Some(first) = list.first() else {
        return 0.0;
    };
    let relevant = qrels.relevant_count(&first.query_id);
    if relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, e) in list.iter().take(depth).enumerate() {
        if qrels.grade(&e.query_id, &e.doc_id) >= 1 {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / relevant as f64
}

/// Expected reciprocal rank at `k` under the cascade model, with stopping
/// probability `(2^g - 1) / 2^max_grade` for grade `g`.
pub fn expected_reciprocal_rank(list: &[RunEntry], qrels: &Qrels, k: usize, max_grade: u32) -> f64 {
    let denom = 2f64.powi(max_grade as i32);
    let mut not_stopped = 1.0;
    let mut err = 0.0;
    for (i, e) in list.iter().take(k).enumerate() {
        let g = qrels.grade(&e.query_id, &e.doc_id).min(max_grade);
        let r = (2f64.powi(g as i32) - 1.0) / denom;
        err += not_stopped * r / (i + 1) as f64;
        not_stopped *= 1.0 - r;
    }
    err
}

/// Queries of `run` that have judgments, plus the count of those skipped.
fn judged_queries<'a>(run: &'a RankedRun, qrels: &Qrels) -> Result<(Vec<&'a [RunEntry]>, usize)> {
    let mut judged = Vec::new();
    let mut skipped = 0;
    for (qid, list) in run.queries() {
        if qrels.contains_query(qid) {
            judged.push(list);
        } else {
            skipped += 1;
        }
    }
    if judged.is_empty() {
        return Err(Error::NoOverlappingQueries);
    }
    Ok((judged, skipped))
}

fn mean_over(run: &RankedRun, qrels: &Qrels, f: impl Fn(&[RunEntry]) -> f64) -> Result<f64> {
    let (judged, _) = judged_queries(run, qrels)?;
    Ok(judged.iter().map(|l| f(l)).sum::<f64>() / judged.len() as f64)
}

pub fn mrr(run: &RankedRun, qrels: &Qrels) -> Result<f64> {
    mean_over(run, qrels, |l| reciprocal_rank(l, qrels))
}

pub fn precision_at(run: &RankedRun, qrels: &Qrels, k: usize) -> Result<f64> {
    mean_over(run, qrels, |l| precision(l, qrels, k))
}

pub fn map(run: &RankedRun, qrels: &Qrels, depth: usize) -> Result<f64> {
    mean_over(run, qrels, |l| average_precision(l, qrels, depth))
}

pub fn err_at(run: &RankedRun, qrels: &Qrels, k: usize, max_grade: u32) -> Result<f64> {
    mean_over(run, qrels, |l| {
        expected_reciprocal_rank(l, qrels, k, max_grade)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Mrr,
    P10,
    Map,
    Err20,
}

impl std::str::FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mrr" => Ok(Measure::Mrr),
            "p10" | "p@10" => Ok(Measure::P10),
            "map" => Ok(Measure::Map),
            "err20" | "err@20" => Ok(Measure::Err20),
            other => Err(format!("unknown measure '{other}'")),
        }
    }
}

/// MRR, P@10, MAP@1000 and ERR@20 averaged over judged queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub mrr: f64,
    pub p_at_10: f64,
    pub map: f64,
    pub err_at_20: f64,
    pub queries: usize,
    /// Run queries without judgments.
    pub skipped: usize,
}

impl Evaluation {
    pub fn get(&self, m: Measure) -> f64 {
        match m {
            Measure::Mrr => self.mrr,
            Measure::P10 => self.p_at_10,
            Measure::Map => self.map,
            Measure::Err20 => self.err_at_20,
        }
    }
}

pub const P_DEPTH: usize = 10;
pub const MAP_DEPTH: usize = 1000;
pub const ERR_DEPTH: usize = 20;

fn evaluate_lists(
    lists: &[&[RunEntry]],
    qrels: &Qrels,
    max_grade: u32,
    skipped: usize,
) -> Evaluation {
    let n = lists.len() as f64;
    let mean = |f: &dyn Fn(&[RunEntry]) -> f64| lists.iter().map(|l| f(l)).sum::<f64>() / n;
    Evaluation {
        mrr: mean(&|l| reciprocal_rank(l, qrels)),
        p_at_10: mean(&|l| precision(l, qrels, P_DEPTH)),
        map: mean(&|l| average_precision(l, qrels, MAP_DEPTH)),
        err_at_20: mean(&|l| expected_reciprocal_rank(l, qrels, ERR_DEPTH, max_grade)),
        queries: lists.len(),
        skipped,
    }
}

pub fn evaluate(run: &RankedRun, qrels: &Qrels, max_grade: u32) -> Result<Evaluation> {
    let (judged, skipped) = judged_queries(run, qrels)?;
    Ok(evaluate_lists(&judged, qrels, max_grade, skipped))
}

/// `0.50, 0.55, ..., 1.00`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub evaluation: Evaluation,
}

pub fn alpha_sweep(
    run: &RankedRun,
    coherence: &HashMap<String, CoherenceScore>,
    qrels: &Qrels,
    grid: &[f64],
    max_grade: u32,
) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&alpha| {
            let reranked = rerank(run, coherence, alpha)?;
            Ok(SweepRow {
                alpha,
                evaluation: evaluate(&reranked, qrels, max_grade)?,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "alpha,mrr,p10,map,err20")?;
    for r in rows {
        let e = &r.evaluation;
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.alpha, e.mrr, e.p_at_10, e.map, e.err_at_20
        )?;
    }
    Ok(())
}

/// Query-to-fold assignment, read from `qid fold` lines.
pub fn parse_folds<R: BufRead>(reader: R) -> Result<HashMap<String, usize>> {
    let mut folds = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(malformed("folds", i + 1, "expected 'qid fold'"));
        }
        let fold = fields[1]
            .parse()
            .map_err(|_| malformed("folds", i + 1, format!("bad fold '{}'", fields[1])))?;
        folds.insert(fields[0].to_string(), fold);
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub alpha: f64,
    pub evaluation: Evaluation,
}

/// For each fold, picks the alpha maximizing `target` on the other folds and
/// evaluates it on the held-out fold. Queries without a fold are ignored.
pub fn cross_validate(
    run: &RankedRun,
    coherence: &HashMap<String, CoherenceScore>,
    qrels: &Qrels,
    folds: &HashMap<String, usize>,
    grid: &[f64],
    target: Measure,
    max_grade: u32,
) -> Result<Vec<FoldResult>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty alpha grid".into()));
    }
    let reranked: Vec<RankedRun> = grid
        .iter()
        .map(|&a| rerank(run, coherence, a))
        .collect::<Result<_>>()?;
    let fold_ids: std::collections::BTreeSet<usize> = folds.values().copied().collect();
    let lists_in = |r: &'_ RankedRun, pick: &dyn Fn(usize) -> bool| -> Vec<Vec<RunEntry>> {
        r.queries()
            .filter(|(q, _)| qrels.contains_query(q) && folds.get(*q).is_some_and(|&f| pick(f)))
            .map(|(_, l)| l.to_vec())
            .collect()
    };
    let mut results = Vec::new();
    for &fold in &fold_ids {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in reranked.iter().enumerate() {
            let train = lists_in(r, &|f| f != fold);
            if train.is_empty() {
                continue;
            }
            let refs: Vec<&[RunEntry]> = train.iter().map(Vec::as_slice).collect();
            let value = evaluate_lists(&refs, qrels, max_grade, 0).get(target);
            if best.is_none_or(|(_, b)| value > b) {
                best = Some((i, value));
            }
        }
        let chosen = best.map_or(grid.len() - 1, |(i, _)| i);
        let test = lists_in(&reranked[chosen], &|f| f == fold);
        if test.is_empty() {
            continue;
        }
        let refs: Vec<&[RunEntry]> = test.iter().map(Vec::as_slice).collect();
        results.push(FoldResult {
            fold,
            alpha: grid[chosen],
            evaluation: evaluate_lists(&refs, qrels, max_grade, 0),
        });
    }
    if results.is_empty() {
        return Err(Error::NoOverlappingQueries);
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::ModelId;
    use proptest::prelude::*;

    fn run_of(rows: &[(&str, &str, f64)]) -> RankedRun {
        let mut rank: HashMap<&str, usize> = HashMap::new();
        let entries = rows
            .iter()
            .map(|&(q, d, s)| {
                let r = rank.entry(q).or_insert(0);
                *r += 1;
                RunEntry {
                    query_id: q.into(),
                    doc_id: d.into(),
                    rank: *r,
                    rsv: s,
                    tag: "base".into(),
                }
            })
            .collect();
        RankedRun::from_entries(entries).unwrap()
    }

    #[test]
    fn parses_trec_run_line() {
        let run = parse_run("150 Q0 clueweb09-en0001-02-21241 1 -5.31 base\n".as_bytes()).unwrap();
        let e = &run.query("150").unwrap()[0];
        assert_eq!(e.doc_id, "clueweb09-en0001-02-21241");
        assert_eq!(e.rank, 1);
        assert_eq!(e.rsv, -5.31);
        assert_eq!(e.tag, "base");
    }

    #[test]
    fn empty_run_is_empty() {
        assert!(parse_run("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn run_validation_errors() {
        let gap = "1 Q0 a 1 2.0 t\n1 Q0 b 3 1.0 t\n";
        assert!(matches!(
            parse_run(gap.as_bytes()),
            Err(Error::InvalidRanking { .. })
        ));
        let dup = "1 Q0 a 1 2.0 t\n1 Q0 a 2 1.0 t\n";
        assert!(matches!(
            parse_run(dup.as_bytes()),
            Err(Error::Duplicate { .. })
        ));
        let short = "1 Q0 a 1 2.0 t\n1 Q0 b 2\n";
        assert!(matches!(
            parse_run(short.as_bytes()),
            Err(Error::Malformed { line: 2, .. })
        ));
        let rising = "1 Q0 a 1 1.0 t\n1 Q0 b 2 2.0 t\n";
        assert!(matches!(
            parse_run(rising.as_bytes()),
            Err(Error::InvalidRanking { .. })
        ));
        // Ranks may arrive out of order.
        let shuffled = "1 Q0 b 2 1.0 t\n1 Q0 a 1 2.0 t\n";
        let run = parse_run(shuffled.as_bytes()).unwrap();
        assert_eq!(run.ordering()["1"], ["a", "b"]);
    }

    #[test]
    fn qrels_parsing() {
        let q = parse_qrels("1 0 a 2\n1 0 b 0\n2 0 c -2\n".as_bytes()).unwrap();
        assert_eq!(q.grade("1", "a"), 2);
        assert_eq!(q.grade("2", "c"), 0);
        assert_eq!(q.max_grade(), 2);
        assert_eq!(q.relevant_count("1"), 1);
        assert!(matches!(
            parse_qrels("1 0 a 1\n1 0 a 2\n".as_bytes()),
            Err(Error::Duplicate { .. })
        ));
        assert!(matches!(
            parse_qrels("1 0 a\n".as_bytes()),
            Err(Error::Malformed { line: 1, .. })
        ));
    }

    fn coh(values: &[(&str, f64)]) -> HashMap<String, CoherenceScore> {
        values
            .iter()
            .map(|&(d, v)| (d.to_string(), CoherenceScore::defined(ModelId::Atf, v)))
            .collect()
    }

    #[test]
    fn alpha_one_is_identity_and_zero_is_pure_coherence() {
        let run = run_of(&[("q", "d1", 3.0), ("q", "d2", 2.0), ("q", "d3", 1.0)]);
        let c = coh(&[("d1", 0.1), ("d2", 0.9), ("d3", 0.5)]);
        assert_eq!(rerank(&run, &c, 1.0).unwrap().ordering(), run.ordering());
        assert_eq!(
            rerank(&run, &c, 0.0).unwrap().ordering()["q"],
            ["d2", "d3", "d1"]
        );
    }

    #[test]
    fn hand_mixed_scores() {
        // rsv_norm = [1, 0.5, 0], coh_norm = [0, 1, 0.2]
        let run = run_of(&[("q", "d1", 10.0), ("q", "d2", 5.0), ("q", "d3", 0.0)]);
        let c = coh(&[("d1", 0.0), ("d2", 5.0), ("d3", 1.0)]);
        let r = rerank(&run, &c, 0.5).unwrap();
        let list = r.query("q").unwrap();
        let got: Vec<(&str, f64)> = list.iter().map(|e| (e.doc_id.as_str(), e.rsv)).collect();
        assert_eq!(got[0].0, "d2");
        assert!((got[0].1 - 0.75).abs() < 1e-12);
        assert_eq!(got[1].0, "d1");
        assert!((got[1].1 - 0.5).abs() < 1e-12);
        assert_eq!(got[2].0, "d3");
        assert!((got[2].1 - 0.1).abs() < 1e-12);
        assert!(list.iter().all(|e| e.tag == RERANK_TAG));
    }

    #[test]
    fn lower_is_better_models_are_oriented() {
        let run = run_of(&[("q", "a", 1.0), ("q", "b", 1.0)]);
        let c: HashMap<String, CoherenceScore> = [
            (
                "a".to_string(),
                CoherenceScore::defined(ModelId::PageRank, 0.9),
            ),
            (
                "b".to_string(),
                CoherenceScore::defined(ModelId::PageRank, 0.2),
            ),
        ]
        .into();
        assert_eq!(rerank(&run, &c, 0.0).unwrap().ordering()["q"], ["b", "a"]);
    }

    #[test]
    fn missing_coherence_counts_as_least_coherent() {
        let run = run_of(&[("q", "a", 1.0), ("q", "b", 1.0), ("q", "c", 1.0)]);
        let c = coh(&[("b", 0.3)]);
        assert_eq!(
            rerank(&run, &c, 0.0).unwrap().ordering()["q"],
            ["b", "a", "c"]
        );
        assert!(rerank(&run, &c, 1.5).is_err());
    }

    #[test]
    fn single_query_metric_values() {
        let qrels = parse_qrels("q 0 c 1\n".as_bytes()).unwrap();
        let run = run_of(&[("q", "a", 3.0), ("q", "b", 2.0), ("q", "c", 1.0)]);
        assert!((mrr(&run, &qrels).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let docs: Vec<String> = (0..12).map(|i| format!("d{i}")).collect();
        let rows: Vec<(&str, &str, f64)> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| ("q", d.as_str(), -(i as f64)))
            .collect();
        let run = run_of(&rows);
        let qrels = parse_qrels("q 0 d2 1\nq 0 d7 1\nq 0 d11 1\n".as_bytes()).unwrap();
        assert!((precision_at(&run, &qrels, 10).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn err_single_relevant_at_top() {
        let qrels = parse_qrels("q 0 a 1\n".as_bytes()).unwrap();
        let run = run_of(&[("q", "a", 1.0), ("q", "b", 0.5)]);
        assert!((err_at(&run, &qrels, 20, 1).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_overlap_is_an_error() {
        let qrels = parse_qrels("x 0 a 1\n".as_bytes()).unwrap();
        let run = run_of(&[("q", "a", 1.0)]);
        assert!(matches!(
            mrr(&run, &qrels),
            Err(Error::NoOverlappingQueries)
        ));
        let both = run_of(&[("q", "a", 1.0), ("x", "a", 1.0)]);
        assert_eq!(evaluate(&both, &qrels, 1).unwrap().skipped, 1);
    }

    #[test]
    fn map_is_one_only_for_a_relevant_prefix() {
        let qrels = parse_qrels("q 0 a 1\nq 0 b 1\n".as_bytes()).unwrap();
        let prefix = run_of(&[("q", "a", 3.0), ("q", "b", 2.0), ("q", "c", 1.0)]);
        assert_eq!(map(&prefix, &qrels, 1000).unwrap(), 1.0);
        let gap = run_of(&[("q", "a", 3.0), ("q", "c", 2.0), ("q", "b", 1.0)]);
        assert!(map(&gap, &qrels, 1000).unwrap() < 1.0);
    }

    #[test]
    fn sweep_grid_and_identity_row() {
        let grid = default_alpha_grid();
        assert_eq!(grid.len(), 11);
        assert_eq!(grid[0], 0.5);
        assert_eq!(grid[10], 1.0);
        let qrels = parse_qrels("q 0 b 1\n".as_bytes()).unwrap();
        let run = run_of(&[("q", "a", 2.0), ("q", "b", 1.9), ("q", "c", 1.0)]);
        let c = coh(&[("a", 0.0), ("b", 1.0), ("c", 0.5)]);
        let rows = alpha_sweep(&run, &c, &qrels, &[1.0], 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].evaluation, evaluate(&run, &qrels, 1).unwrap());
        let rows = alpha_sweep(&run, &c, &qrels, &grid, 1).unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[10].evaluation, evaluate(&run, &qrels, 1).unwrap());
    }

    #[test]
    fn cross_validation_picks_alpha_on_training_folds() {
        // In both queries the relevant doc is second but most coherent.
        let run = run_of(&[
            ("1", "a", 2.0),
            ("1", "b", 1.9),
            ("2", "c", 2.0),
            ("2", "d", 1.9),
        ]);
        let qrels = parse_qrels("1 0 b 1\n2 0 d 1\n".as_bytes()).unwrap();
        let c = coh(&[("a", 0.0), ("b", 1.0), ("c", 0.0), ("d", 1.0)]);
        let folds = parse_folds("1 0\n2 1\n".as_bytes()).unwrap();
        // At alpha 0.5 the mixed scores tie and baseline order is kept.
        let res =
            cross_validate(&run, &c, &qrels, &folds, &[0.3, 0.5, 1.0], Measure::Mrr, 1).unwrap();
        assert_eq!(res.len(), 2);
        for r in &res {
            assert_eq!(r.alpha, 0.3);
            assert_eq!(r.evaluation.mrr, 1.0);
        }
    }

    proptest! {
        #[test]
        fn rerank_permutes_and_ignores_affine_rsv(
            rsv in prop::collection::vec(-20i32..20, 1..15),
            cohs in prop::collection::vec(0i32..10, 15),
            alpha_step in 0u32..=20,
            scale in 1i32..5,
            shift in -10i32..10,
        ) {
            let mut rsv: Vec<f64> = rsv.into_iter().map(f64::from).collect();
            rsv.sort_by(|a, b| b.total_cmp(a));
            let docs: Vec<String> = (0..rsv.len()).map(|i| format!("d{i}")).collect();
            let rows: Vec<(&str, &str, f64)> = docs.iter().zip(&rsv).map(|(d, &s)| ("q", d.as_str(), s)).collect();
            let moved: Vec<(&str, &str, f64)> = rows.iter().map(|&(q, d, s)| (q, d, s * scale as f64 + shift as f64)).collect();
            let c: HashMap<String, CoherenceScore> = docs.iter().zip(&cohs)
                .map(|(d, &v)| (d.clone(), CoherenceScore::defined(ModelId::Atf, v as f64)))
                .collect();
            let alpha = alpha_step as f64 / 20.0;
            let a = rerank(&run_of(&rows), &c, alpha).unwrap();
            let b = rerank(&run_of(&moved), &c, alpha).unwrap();
            prop_assert_eq!(a.ordering(), b.ordering());
            let mut got = a.ordering()["q"].clone();
            got.sort();
            let mut want: Vec<&str> = docs.iter().map(String::as_str).collect();
            want.sort();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn metrics_lie_in_unit_interval(grades in prop::collection::vec(0u32..4, 1..30)) {
            let docs: Vec<String> = (0..grades.len()).map(|i| format!("d{i}")).collect();
            let rows: Vec<(&str, &str, f64)> = docs.iter().enumerate().map(|(i, d)| ("q", d.as_str(), -(i as f64))).collect();
            let run = run_of(&rows);
            let mut qrels = Qrels::new();
            for (d, &g) in docs.iter().zip(&grades) {
                qrels.insert("q", d, g).unwrap();
            }
            let e = evaluate(&run, &qrels, qrels.max_grade()).unwrap();
            for v in [e.mrr, e.p_at_10, e.map, e.err_at_20] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
