//! `cohkit`: batch scoring, reordering evaluation, reranking and IR
//! evaluation over interchange JSONL corpora and TREC run files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cohkit::document::{read_corpus, truncate_sentences, IngestOptions, DEFAULT_MAX_TERMS};
use cohkit::graph::{build_bipartite, project};
use cohkit::reorder::{evaluate_models, summary_json, write_reports_csv, DEFAULT_PERMUTATIONS};
use cohkit::rerank::{self, Evaluation, Measure, Qrels, RankedRun};
use cohkit::score::normalize_collection;
use cohkit::{
    AnnotatedDocument, CoherenceScore, EntropyMode, GraphMetricConfig, ModelId, Scorer,
    ScoringConfig, Weighting,
};

#[derive(Parser, Debug)]
#[command(
    name = "cohkit",
    version,
    about = "Entity-based document coherence toolkit"
)]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON file holding a `command` key plus any flags, e.g.
    /// `{"command": "score", "input": "c.jsonl", "model": "all"}`.
    #[arg(long)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score every document of a corpus.
    Score(ScoreArgs),
    /// Compare each document against shuffled copies of itself.
    ReorderEval(ReorderArgs),
    /// Mix coherence into a TREC run.
    Rerank(RerankArgs),
    /// MRR, P@10, MAP and ERR@20 of a TREC run.
    IrEval(IrEvalArgs),
    /// Write sentence projection graphs as edge lists.
    ExportGraph(ExportArgs),
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Interchange JSONL corpus; `-` for stdin.
    #[arg(long, default_value = "-")]
    input: PathBuf,
    /// Keep only the first N tokens of each sentence.
    #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
    max_terms: usize,
    /// Fold trailing plural "s" into the singular entity key.
    #[arg(long)]
    strip_plural: bool,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Entropy order k for entropy models.
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long, default_value = "ngram", value_parser = parse_mode)]
    mode: EntropyMode,
    /// PageRank damping factor.
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    models: ModelArgs,
    /// `all`, `entropy`, or a comma-separated list of model names.
    #[arg(long, default_value = "all")]
    model: String,
    #[arg(long, default_value = "unweighted")]
    weighting: Weighting,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReorderArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    models: ModelArgs,
    #[arg(long, default_value = "all")]
    model: String,
    #[arg(long, default_value = "distance")]
    weighting: Weighting,
    #[arg(long, required = true)]
    seed: Option<u64>,
    /// Permutations per document.
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    k: usize,
    /// Per-document CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary; defaults to the CSV path with a `.json` extension,
    /// or stderr when writing the CSV to stdout.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RerankArgs {
    /// Baseline TREC run.
    #[arg(long)]
    run: PathBuf,
    /// Corpus to score inline.
    #[arg(long, conflicts_with = "scores", required_unless_present = "scores")]
    input: Option<PathBuf>,
    /// Score CSV written by `cohkit score`.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
    max_terms: usize,
    #[arg(long)]
    strip_plural: bool,
    #[command(flatten)]
    models: ModelArgs,
    /// A single model; `entropy` means the entropy model of `--order`.
    #[arg(long, default_value = "entropy")]
    model: String,
    #[arg(long, default_value = "unweighted")]
    weighting: Weighting,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    /// `default` or comma-separated values in [0, 1]. Needs `--qrels`.
    #[arg(long)]
    alpha_grid: Option<String>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// `qid fold` lines for cross-validating alpha over the grid.
    #[arg(long, requires = "qrels")]
    folds: Option<PathBuf>,
    /// Measure maximized when cross-validating.
    #[arg(long, default_value = "map")]
    cv_measure: Measure,
    /// Reranked run; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Baseline and reranked metrics; stderr when omitted.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Alpha sweep CSV; stderr when omitted.
    #[arg(long)]
    sweep: Option<PathBuf>,
    /// Cross-validation CSV; stderr when omitted.
    #[arg(long)]
    cv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IrEvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value = "unweighted")]
    weighting: Weighting,
    /// Only export this document.
    #[arg(long)]
    doc: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<EntropyMode, String> {
    match s {
        "ngram" => Ok(EntropyMode::Ngram),
        "conditional" => Ok(EntropyMode::Conditional),
        other => Err(format!(
            "unknown entropy mode '{other}' (ngram|conditional)"
        )),
    }
}

/// Turns a manifest object into the equivalent argument vector.
fn manifest_args(path: &Path) -> Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let serde_json::Value::Object(map) = value else {
        bail!("{}: manifest must be a JSON object", path.display());
    };
    let command = map
        .get("command")
        .and_then(|c| c.as_str())
        .with_context(|| format!("{}: manifest needs a string \"command\"", path.display()))?;
    let mut args = vec!["cohkit".to_string(), command.to_string()];
    for (key, value) in &map {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &serde_json::Value| match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            other => bail!("manifest key '{key}': unsupported value {other}"),
        };
        match value {
            serde_json::Value::Bool(true) => args.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
                args.push(flag);
                args.push(joined.join(","));
            }
            v => {
                args.push(flag);
                args.push(scalar(v)?);
            }
        }
    }
    Ok(args)
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

/// stderr unless a path is given.
fn open_side_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(io::stderr())),
        Some(p) => open_output(Some(p)),
    }
}

fn load_corpus(args: &CorpusArgs) -> Result<Vec<AnnotatedDocument>> {
    load_corpus_from(&args.input, args.max_terms, args.strip_plural)
}

fn load_corpus_from(
    path: &Path,
    max_terms: usize,
    strip_plural: bool,
) -> Result<Vec<AnnotatedDocument>> {
    if max_terms == 0 {
        bail!("--max-terms must be positive");
    }
    let opts = IngestOptions { strip_plural };
    let docs = read_corpus(open_input(path)?, opts)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(docs
        .iter()
        .map(|d| truncate_sentences(d, max_terms))
        .collect())
}

fn parse_models(spec: &str, order: usize) -> Result<Vec<ModelId>> {
    let entropy = || {
        ModelId::entropy(order).with_context(|| format!("--order must be 0, 1 or 2, got {order}"))
    };
    match spec {
        "all" => {
            let mut models = vec![entropy()?];
            models.extend(ModelId::GRAPH);
            Ok(models)
        }
        _ => spec
            .split(',')
            .map(|name| match name.trim() {
                "entropy" => entropy(),
                other => other.parse().map_err(anyhow::Error::msg),
            })
            .collect(),
    }
}

fn scoring_config(models: &ModelArgs, weighting: Weighting) -> Result<ScoringConfig> {
    if !(models.damping > 0.0 && models.damping < 1.0) {
        bail!("--damping must lie in (0, 1), got {}", models.damping);
    }
    Ok(ScoringConfig {
        entropy_mode: models.mode,
        graph: GraphMetricConfig {
            damping: models.damping,
            weighting,
            ..GraphMetricConfig::default()
        },
    })
}

/// Six decimals, without a minus sign on values that round to zero.
fn fmt6(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    format!("{:.6}", if r == 0.0 { 0.0 } else { r })
}

fn round6(x: f64) -> f64 {
    fmt6(x).parse().expect("formatted float parses")
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    doc_id: String,
    model: String,
    raw: String,
    oriented: String,
    normalized: String,
    defined: bool,
}

/// Scores documents in parallel, keeping input order.
fn score_corpus(
    docs: &[AnnotatedDocument],
    models: &[ModelId],
    cfg: &ScoringConfig,
) -> Vec<Vec<CoherenceScore>> {
    docs.par_iter()
        .map(|doc| {
            let scorer = Scorer::new(doc);
            models.iter().map(|&m| scorer.score(m, cfg)).collect()
        })
        .collect()
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let models = parse_models(&args.model, args.models.order)?;
    let cfg = scoring_config(&args.models, args.weighting)?;
    let mut docs = load_corpus(&args.corpus)?;
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let scores = score_corpus(&docs, &models, &cfg);
    let flat: Vec<CoherenceScore> = scores.iter().flatten().copied().collect();
    let normalized = normalize_collection(&flat);

    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(open_output(args.out.as_deref())?);
    w.write_record([
        "doc_id",
        "model",
        "raw",
        "oriented",
        "normalized",
        "defined",
    ])?;
    for (i, s) in flat.iter().enumerate() {
        let doc = &docs[i / models.len()];
        w.serialize(ScoreRow {
            doc_id: doc.doc_id.clone(),
            model: s.model.to_string(),
            raw: fmt6(s.raw),
            oriented: fmt6(s.oriented().unwrap_or(0.0)),
            normalized: fmt6(normalized[i]),
            defined: s.defined,
        })?;
    }
    w.flush()?;
    log::info!(
        "scored {} documents with {} models",
        docs.len(),
        models.len()
    );
    Ok(())
}

fn cmd_reorder_eval(args: ReorderArgs) -> Result<()> {
    let seed = args.seed.context("--seed is required")?;
    let models = parse_models(&args.model, args.models.order)?;
    let cfg = scoring_config(&args.models, args.weighting)?;
    let docs = load_corpus(&args.corpus)?;
    let reports = evaluate_models(&docs, &models, &cfg, args.k, seed)?;

    let mut out = open_output(args.out.as_deref())?;
    write_reports_csv(&mut out, &reports)?;
    out.flush()?;

    let summary = serde_json::to_string_pretty(&summary_json(&reports, seed))?;
    let summary_path = args
        .summary
        .or_else(|| args.out.as_ref().map(|p| p.with_extension("json")));
    let mut side = open_side_output(summary_path.as_deref())?;
    writeln!(side, "{summary}")?;
    side.flush()?;
    for r in &reports {
        match r.accuracy {
            Some(a) => log::info!("{}: accuracy {}", r.model, fmt6(a)),
            None => log::info!("{}: no comparisons", r.model),
        }
    }
    Ok(())
}

fn single_model(spec: &str, order: usize) -> Result<ModelId> {
    let models = parse_models(spec, order)?;
    if models.len() != 1 {
        bail!("--model must name a single model for reranking");
    }
    Ok(models[0])
}

fn read_score_file(path: &Path, model: ModelId) -> Result<HashMap<String, CoherenceScore>> {
    let mut reader = csv::Reader::from_reader(open_input(path)?);
    let mut scores = HashMap::new();
    for (i, row) in reader.deserialize::<ScoreRow>().enumerate() {
        let row = row.with_context(|| format!("{}: record {}", path.display(), i + 1))?;
        if row.model != model.name() {
            continue;
        }
        let raw: f64 = row
            .raw
            .parse()
            .with_context(|| format!("{}: bad raw value '{}'", path.display(), row.raw))?;
        let score = if row.defined {
            CoherenceScore::defined(model, raw)
        } else {
            CoherenceScore::undefined(model)
        };
        scores.insert(row.doc_id, score);
    }
    if scores.is_empty() {
        log::warn!("{} holds no scores for model {model}", path.display());
    }
    Ok(scores)
}

fn inline_scores(
    args: &RerankArgs,
    input: &Path,
    model: ModelId,
    run: &RankedRun,
) -> Result<HashMap<String, CoherenceScore>> {
    let cfg = scoring_config(&args.models, args.weighting)?;
    let wanted: std::collections::HashSet<&str> =
        run.entries().map(|e| e.doc_id.as_str()).collect();
    let docs: Vec<AnnotatedDocument> = load_corpus_from(input, args.max_terms, args.strip_plural)?
        .into_iter()
        .filter(|d| wanted.contains(d.doc_id.as_str()))
        .collect();
    let scores = score_corpus(&docs, &[model], &cfg);
    // Rounded like a score file, so both routes rerank identically.
    Ok(docs
        .into_iter()
        .zip(scores)
        .map(|(d, s)| {
            let s = s[0];
            let s = if s.defined {
                CoherenceScore::defined(model, round6(s.raw))
            } else {
                s
            };
            (d.doc_id, s)
        })
        .collect())
}

fn parse_alpha_grid(spec: &str) -> Result<Vec<f64>> {
    if spec == "default" {
        return Ok(rerank::default_alpha_grid());
    }
    let grid: Vec<f64> = spec
        .split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .with_context(|| format!("bad alpha '{a}'"))
        })
        .collect::<Result<_>>()?;
    if let Some(a) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        bail!("alpha {a} outside [0, 1]");
    }
    if grid.is_empty() {
        bail!("empty alpha grid");
    }
    Ok(grid)
}

fn read_qrels(path: &Path) -> Result<Qrels> {
    rerank::parse_qrels(open_input(path)?).with_context(|| format!("reading {}", path.display()))
}

fn read_run(path: &Path) -> Result<RankedRun> {
    rerank::parse_run(open_input(path)?).with_context(|| format!("reading {}", path.display()))
}

const METRIC_HEADER: &str = "mrr,p10,map,err20";

fn metric_fields(e: &Evaluation) -> String {
    format!(
        "{},{},{},{}",
        fmt6(e.mrr),
        fmt6(e.p_at_10),
        fmt6(e.map),
        fmt6(e.err_at_20)
    )
}

fn cmd_rerank(args: RerankArgs) -> Result<()> {
    let model = single_model(&args.model, args.models.order)?;
    let run = read_run(&args.run)?;
    let coherence = match (&args.scores, &args.input) {
        (Some(path), _) => read_score_file(path, model)?,
        (None, Some(input)) => inline_scores(&args, input, model, &run)?,
        (None, None) => bail!("one of --input or --scores is required"),
    };
    let missing: std::collections::BTreeSet<&str> = run
        .entries()
        .map(|e| e.doc_id.as_str())
        .filter(|d| !coherence.contains_key(*d))
        .collect();
    if !missing.is_empty() {
        log::warn!(
            "{} run document(s) have no coherence score and count as least coherent",
            missing.len()
        );
    }

    let reranked = rerank::rerank(&run, &coherence, args.alpha)?;
    let mut out = open_output(args.out.as_deref())?;
    rerank::write_run(&mut out, &reranked)?;
    out.flush()?;

    let grid = args
        .alpha_grid
        .as_deref()
        .map(parse_alpha_grid)
        .transpose()?;
    let Some(qrels_path) = &args.qrels else {
        if grid.is_some() {
            bail!("--alpha-grid needs --qrels");
        }
        return Ok(());
    };
    let qrels = read_qrels(qrels_path)?;
    let max_grade = qrels.max_grade();

    let mut m = open_side_output(args.metrics.as_deref())?;
    writeln!(m, "system,alpha,queries,skipped,{METRIC_HEADER}")?;
    for (name, alpha, r) in [
        ("baseline", 1.0, &run),
        (rerank::RERANK_TAG, args.alpha, &reranked),
    ] {
        let e = rerank::evaluate(r, &qrels, max_grade)?;
        writeln!(
            m,
            "{name},{},{},{},{}",
            fmt6(alpha),
            e.queries,
            e.skipped,
            metric_fields(&e)
        )?;
    }
    m.flush()?;

    if let Some(grid) = &grid {
        let rows = rerank::alpha_sweep(&run, &coherence, &qrels, grid, max_grade)?;
        let mut s = open_side_output(args.sweep.as_deref())?;
        writeln!(s, "alpha,{METRIC_HEADER}")?;
        for r in &rows {
            writeln!(s, "{},{}", fmt6(r.alpha), metric_fields(&r.evaluation))?;
        }
        s.flush()?;
    }

    if let Some(folds_path) = &args.folds {
        let folds = rerank::parse_folds(open_input(folds_path)?)
            .with_context(|| format!("reading {}", folds_path.display()))?;
        let grid = grid.unwrap_or_else(rerank::default_alpha_grid);
        let results = rerank::cross_validate(
            &run,
            &coherence,
            &qrels,
            &folds,
            &grid,
            args.cv_measure,
            max_grade,
        )?;
        let mut c = open_side_output(args.cv.as_deref())?;
        writeln!(c, "fold,alpha,queries,{METRIC_HEADER}")?;
        for r in &results {
            writeln!(
                c,
                "{},{},{},{}",
                r.fold,
                fmt6(r.alpha),
                r.evaluation.queries,
                metric_fields(&r.evaluation)
            )?;
        }
        c.flush()?;
    }
    Ok(())
}

fn cmd_ir_eval(args: IrEvalArgs) -> Result<()> {
    let run = read_run(&args.run)?;
    let qrels = read_qrels(&args.qrels)?;
    let e = rerank::evaluate(&run, &qrels, qrels.max_grade())?;
    if e.skipped > 0 {
        log::warn!(
            "{} run queries have no judgments and were skipped",
            e.skipped
        );
    }
    let mut out = open_output(args.out.as_deref())?;
    writeln!(out, "queries,skipped,{METRIC_HEADER}")?;
    writeln!(out, "{},{},{}", e.queries, e.skipped, metric_fields(&e))?;
    out.flush()?;
    Ok(())
}

fn cmd_export_graph(args: ExportArgs) -> Result<()> {
    let mut docs = load_corpus(&args.corpus)?;
    if let Some(id) = &args.doc {
        docs.retain(|d| &d.doc_id == id);
        if docs.is_empty() {
            bail!("document '{id}' not found");
        }
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let mut out = open_output(args.out.as_deref())?;
    for doc in &docs {
        let g = project(
            &build_bipartite(&cohkit::grid::build_grid(doc)),
            args.weighting,
        );
        writeln!(
            out,
            "# {} nodes={} weighting={}",
            doc.doc_id,
            g.node_count(),
            args.weighting.name()
        )?;
        g.write_edge_list(&mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command.expect("checked by caller") {
        Command::Score(a) => cmd_score(a),
        Command::ReorderEval(a) => cmd_reorder_eval(a),
        Command::Rerank(a) => cmd_rerank(a),
        Command::IrEval(a) => cmd_ir_eval(a),
        Command::ExportGraph(a) => cmd_export_graph(a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COHKIT_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let mut cli = Cli::parse();
    if let Some(path) = cli.manifest.take() {
        let threads = cli.threads;
        let args = match manifest_args(&path) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("error: {e:#}");
                std::process::exit(2);
            }
        };
        cli = Cli::parse_from(args);
        cli.threads = cli.threads.or(threads);
    }
    if cli.command.is_none() {
        eprintln!("error: a subcommand or --manifest is required (see --help)");
        std::process::exit(2);
    }
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
