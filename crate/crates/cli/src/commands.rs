use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, BufReader};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use taxrank::eval::{self, EvalError, EvalReport, GroundTruthSet, SweepTable, HIT_KS};
use taxrank::graph::{self, CategoryGraph, GraphError, NodeKind};
use taxrank::ingest::{self, DumpError, DumpSchema};
use taxrank::paths::{PathEngine, PathParams, SinkSet, SinkSpec};
use taxrank::profile::{DropReason, Profiler, TopicMap};
use taxrank::relatedness::compute_weights;
use thiserror::Error;

use crate::output::{self, cell, num, object, opt_cell, opt_num};
use crate::{Format, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    EmptyProfile(String),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub const IO: u8 = 2;
    pub const NOT_FOUND: u8 = 3;
    pub const EMPTY_PROFILE: u8 = 4;
    pub const CONFIG: u8 = 5;

    pub fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => Self::IO,
            CliError::NotFound(_) => Self::NOT_FOUND,
            CliError::EmptyProfile(_) => Self::EMPTY_PROFILE,
            CliError::Config(_) => Self::CONFIG,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn is_tsv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv"))
}

// ---------------------------------------------------------------------------
// Shared setup
// ---------------------------------------------------------------------------

struct Loaded {
    graph: CategoryGraph,
    sinks: SinkSet,
    params: PathParams,
}

fn load_graph(path: &Path) -> Result<CategoryGraph, CliError> {
    let loaded = if is_tsv(path) {
        File::open(path)
            .map_err(GraphError::from)
            .and_then(|f| graph::read_tsv(BufReader::new(f)))
    } else {
        graph::load(path)
    };
    loaded.map_err(|e| io_err(path, e))
}

fn apply_blocklist(graph: CategoryGraph, path: &Path) -> Result<CategoryGraph, CliError> {
    let text = read_text(path)?;
    let mut blocked = HashSet::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let title = line.strip_prefix("Category:").unwrap_or(line);
        match graph.resolve(title, NodeKind::Category) {
            Ok(id) => {
                blocked.insert(id);
            }
            Err(_) => eprintln!("taxrank: blocklisted category {title:?} is not in the graph"),
        }
    }
    Ok(graph.without_nodes(&blocked))
}

fn setup(config: &RunConfig) -> Result<Loaded, CliError> {
    let params = PathParams::new(config.alpha, config.l_max, config.l_th)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut graph = load_graph(&config.graph)?;
    let specs: Vec<SinkSpec> = serde_json::from_str(&read_text(&config.sinks)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", config.sinks.display())))?;
    if let Some(path) = &config.blocklist {
        graph = apply_blocklist(graph, path)?;
    }
    let sinks = SinkSet::resolve(&graph, &specs).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(path) = &config.blocklist {
        // a sink cut out of the graph could never be reached
        let text = read_text(path)?;
        for line in text.lines().map(str::trim) {
            let title = graph::normalize_title(line.strip_prefix("Category:").unwrap_or(line));
            if let Some(spec) = specs.iter().find(|s| graph::normalize_title(&s.category_title) == title) {
                return Err(CliError::Config(format!("sink {:?} is blocklisted", spec.label)));
            }
        }
    }
    Ok(Loaded { graph, sinks, params })
}

fn with_threads<T: Send>(config: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(pool.install(f))
}

fn csv_text(rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

/// Yields records until the first I/O error, which is parked in `slot`.
fn stop_on_io<'a, T>(
    iter: impl Iterator<Item = Result<T, DumpError>> + 'a,
    slot: &'a mut Option<io::Error>,
) -> impl Iterator<Item = Result<T, DumpError>> + 'a {
    iter.map_while(move |r| match r {
        Err(DumpError::Io(e)) => {
            *slot = Some(e);
            None
        }
        other => Some(other),
    })
}

pub fn ingest(page: &Path, categorylinks: &Path, out: &Path, schema: Option<&Path>) -> Result<String, CliError> {
    let schema = match schema {
        Some(p) => serde_json::from_str(&read_text(p)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => DumpSchema::default(),
    };
    let page_file = File::open(page).map_err(|e| io_err(page, e))?;
    let link_file = File::open(categorylinks).map_err(|e| io_err(categorylinks, e))?;

    let mut page_io = None;
    let mut link_io = None;
    let assembled = ingest::assemble_edges(
        stop_on_io(
            ingest::parse_page_dump(BufReader::with_capacity(1 << 16, page_file), &schema),
            &mut page_io,
        ),
        stop_on_io(
            ingest::parse_categorylinks_dump(BufReader::with_capacity(1 << 16, link_file), &schema),
            &mut link_io,
        ),
    );
    if let Some(e) = page_io {
        return Err(io_err(page, e));
    }
    if let Some(e) = link_io {
        return Err(io_err(categorylinks, e));
    }

    let report = assembled.report.clone();
    if assembled.nodes.is_empty() {
        return Err(CliError::Config("no article or category pages found in the page dump".into()));
    }
    let graph = assembled
        .into_builder()
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    if is_tsv(out) {
        let f = File::create(out).map_err(|e| io_err(out, e))?;
        graph::write_tsv(&graph, f).map_err(|e| io_err(out, e))?;
    } else {
        graph::save(&graph, out).map_err(|e| io_err(out, e))?;
    }

    let report = object([
        ("pages_read", report.pages_read.into()),
        ("links_read", report.links_read.into()),
        ("dangling_links", report.dangling_links.into()),
        ("malformed_tuples", report.malformed_tuples.into()),
        ("self_loops", report.self_loops.into()),
        ("nodes", graph.node_count().into()),
        ("edges", graph.edge_count().into()),
    ]);
    eprint!("{}", output::render(&report));
    Ok(String::new())
}

// ---------------------------------------------------------------------------
// weights
// ---------------------------------------------------------------------------

pub fn weights(config: &RunConfig, topic: &str) -> Result<String, CliError> {
    let Loaded { graph, sinks, params } = setup(config)?;
    let (node, kind) = [NodeKind::Article, NodeKind::Category]
        .into_iter()
        .find_map(|k| graph.resolve(topic, k).ok().map(|id| (id, k)))
        .ok_or_else(|| CliError::NotFound(format!("topic {topic:?} not found in the graph")))?;
    let stats = PathEngine::new(&graph, &sinks)
        .enumerate(node, &params)
        .map_err(|e| CliError::EmptyProfile(e.to_string()))?;
    let rel = compute_weights(&stats, params.alpha)
        .map_err(|_| CliError::EmptyProfile(format!("topic {topic:?} reaches no sink within l_th")))?;

    match config.format.unwrap_or(Format::Json) {
        Format::Json => {
            let rows: Vec<Value> = (0..sinks.len())
                .map(|m| {
                    object([
                        ("sink", sinks.label(m).into()),
                        ("w", num(rel.w[m])),
                        ("n_p", stats.n_p[m].into()),
                        ("l_p", stats.l_p[m].map_or(Value::Null, Value::from)),
                    ])
                })
                .collect();
            Ok(output::render(&object([
                ("topic", graph.title(node).into()),
                ("kind", kind.as_str().into()),
                ("params", output::params(&params)),
                ("effective_depth", stats.effective_depth.into()),
                ("n_tot", stats.n_tot().into()),
                ("n_r", num(rel.n_r)),
                ("weights", Value::Array(rows)),
            ])))
        }
        Format::Csv => {
            let mut rows = vec![vec!["sink".into(), "w".into(), "n_p".into(), "l_p".into()]];
            for m in 0..sinks.len() {
                rows.push(vec![
                    sinks.label(m).to_owned(),
                    cell(rel.w[m]),
                    stats.n_p[m].to_string(),
                    stats.l_p[m].map_or_else(String::new, |l| l.to_string()),
                ]);
            }
            csv_text(rows)
        }
    }
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

fn reason(r: DropReason) -> &'static str {
    match r {
        DropReason::NotFound => "NotFound",
        DropReason::NoPaths => "NoPaths",
        DropReason::PathBlowup => "PathBlowup",
    }
}

pub fn profile(config: &RunConfig, topic_map: &Path) -> Result<String, CliError> {
    let Loaded { graph, sinks, params } = setup(config)?;
    let map = TopicMap::from_json(&read_text(topic_map)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", topic_map.display())))?;
    let profiler = Profiler::new(&graph, &sinks, params);
    let p = with_threads(config, || profiler.profile(&map))?.map_err(|e| {
        CliError::EmptyProfile(format!("{e} ({} topics dropped)", e.dropped.len()))
    })?;

    match config.format.unwrap_or(Format::Json) {
        Format::Json => {
            let scores: Vec<Value> = p
                .ranking
                .iter()
                .map(|&m| object([("sink", sinks.label(m).into()), ("pc", num(p.pc[m]))]))
                .collect();
            let dropped: Vec<Value> = p
                .dropped
                .iter()
                .map(|d| object([("title", d.title.as_str().into()), ("reason", reason(d.reason).into())]))
                .collect();
            Ok(output::render(&object([
                ("owner", p.owner.as_str().into()),
                ("params", output::params(&params)),
                ("scores", Value::Array(scores)),
                ("dropped", Value::Array(dropped)),
                (
                    "category_fallbacks",
                    Value::Array(p.category_fallbacks.iter().map(|t| t.as_str().into()).collect()),
                ),
            ])))
        }
        Format::Csv => {
            let mut rows = vec![vec!["rank".into(), "sink".into(), "pc".into()]];
            for (k, &m) in p.ranking.iter().enumerate() {
                rows.push(vec![(k + 1).to_string(), sinks.label(m).to_owned(), cell(p.pc[m])]);
            }
            csv_text(rows)
        }
    }
}

// ---------------------------------------------------------------------------
// evaluate / sweep
// ---------------------------------------------------------------------------

fn load_ground_truth(path: &Path) -> Result<GroundTruthSet, CliError> {
    GroundTruthSet::from_json(&read_text(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::EmptyClass(_) => CliError::EmptyProfile(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

fn report_json(r: &EvalReport) -> Value {
    let sinks: Vec<Value> = r
        .sinks
        .iter()
        .map(|s| {
            let hits: serde_json::Map<String, Value> = HIT_KS
                .iter()
                .zip(s.hit_rate)
                .map(|(k, h)| (format!("top{k}"), num(h)))
                .collect();
            object([
                ("sink", s.label.as_str().into()),
                ("accounts", s.accounts.into()),
                ("excluded_empty", s.excluded_empty.into()),
                ("undefined_delta", s.undefined_delta.into()),
                ("sc", num(s.sc)),
                ("rk", num(s.rk)),
                ("delta", opt_num(s.delta)),
                ("hit_rate", Value::Object(hits)),
            ])
        })
        .collect();
    let accounts: Vec<Value> = r
        .accounts
        .iter()
        .map(|a| {
            let (sc, rk, delta) = match &a.scores {
                Some(s) => (num(s.sc), Value::from(s.rk), opt_num(s.delta)),
                None => (Value::Null, Value::Null, Value::Null),
            };
            object([
                ("id", a.id.as_str().into()),
                ("gt_sink", a.gt_sink.as_str().into()),
                ("excluded", a.scores.is_none().into()),
                ("sc", sc),
                ("rk", rk),
                ("delta", delta),
            ])
        })
        .collect();
    object([
        ("params", output::params(&r.params)),
        (
            "summary",
            object([
                ("SC", num(r.summary.sc)),
                ("RK", num(r.summary.rk)),
                ("Delta", opt_num(r.summary.delta)),
            ]),
        ),
        ("sinks", Value::Array(sinks)),
        ("accounts", Value::Array(accounts)),
        ("excluded_accounts", r.excluded_accounts.into()),
    ])
}

/// One row per sink per index, then the overall indices under `ALL`.
fn report_csv(r: &EvalReport) -> Result<String, CliError> {
    let mut rows = vec![vec!["sink".to_string(), "index".to_string(), "value".to_string()]];
    for s in &r.sinks {
        rows.push(vec![s.label.clone(), "sc".into(), cell(s.sc)]);
        rows.push(vec![s.label.clone(), "rk".into(), cell(s.rk)]);
        rows.push(vec![s.label.clone(), "delta".into(), opt_cell(s.delta)]);
        for (k, h) in HIT_KS.iter().zip(s.hit_rate) {
            rows.push(vec![s.label.clone(), format!("top{k}"), cell(h)]);
        }
    }
    rows.push(vec!["ALL".into(), "SC".into(), cell(r.summary.sc)]);
    rows.push(vec!["ALL".into(), "RK".into(), cell(r.summary.rk)]);
    rows.push(vec!["ALL".into(), "Delta".into(), opt_cell(r.summary.delta)]);
    csv_text(rows)
}

pub fn evaluate(config: &RunConfig, ground_truth: &Path) -> Result<String, CliError> {
    let Loaded { graph, sinks, params } = setup(config)?;
    let gt = load_ground_truth(ground_truth)?;
    let report = with_threads(config, || eval::eval_set(&gt, &graph, &sinks, params))?.map_err(eval_error)?;
    match config.format.unwrap_or(Format::Json) {
        Format::Json => Ok(output::render(&report_json(&report))),
        Format::Csv => report_csv(&report),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridFile {
    Points(Vec<PathParams>),
    Axes {
        alpha: Vec<f64>,
        l_max: Vec<u32>,
        l_th: Vec<u32>,
    },
}

pub fn parse_grid(text: &str) -> Result<Vec<PathParams>, String> {
    let grid = match serde_json::from_str::<GridFile>(text).map_err(|e| e.to_string())? {
        GridFile::Points(points) => points,
        GridFile::Axes { alpha, l_max, l_th } => {
            let mut points = Vec::new();
            for &a in &alpha {
                for &m in &l_max {
                    for &t in &l_th {
                        points.push(PathParams { alpha: a, l_max: m, l_th: t });
                    }
                }
            }
            points
        }
    };
    if grid.is_empty() {
        return Err("parameter grid is empty".into());
    }
    Ok(grid)
}

fn sweep_csv(t: &SweepTable) -> Result<String, CliError> {
    let mut rows = vec![["alpha", "l_max", "l_th", "SC", "RK", "Delta", "best_sc", "best_rk", "best_delta", "error"]
        .map(String::from)
        .to_vec()];
    for (i, row) in t.rows.iter().enumerate() {
        let (sc, rk, d) = match &row.summary {
            Some(s) => (cell(s.sc), cell(s.rk), opt_cell(s.delta)),
            None => Default::default(),
        };
        let mark = |b: Option<usize>| if b == Some(i) { "1" } else { "0" }.to_string();
        rows.push(vec![
            cell(row.params.alpha),
            row.params.l_max.to_string(),
            row.params.l_th.to_string(),
            sc,
            rk,
            d,
            mark(t.best_sc),
            mark(t.best_rk),
            mark(t.best_delta),
            row.error.clone().unwrap_or_default(),
        ]);
    }
    csv_text(rows)
}

fn sweep_json(t: &SweepTable) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|row| {
            let (sc, rk, d) = match &row.summary {
                Some(s) => (num(s.sc), num(s.rk), opt_num(s.delta)),
                None => (Value::Null, Value::Null, Value::Null),
            };
            object([
                ("params", output::params(&row.params)),
                ("SC", sc),
                ("RK", rk),
                ("Delta", d),
                ("error", row.error.as_deref().map_or(Value::Null, Value::from)),
            ])
        })
        .collect();
    let idx = |b: Option<usize>| b.map_or(Value::Null, Value::from);
    object([
        ("rows", Value::Array(rows)),
        (
            "best",
            object([("SC", idx(t.best_sc)), ("RK", idx(t.best_rk)), ("Delta", idx(t.best_delta))]),
        ),
    ])
}

pub fn sweep(config: &RunConfig, ground_truth: &Path, grid: &Path) -> Result<String, CliError> {
    let Loaded { graph, sinks, .. } = setup(config)?;
    let gt = load_ground_truth(ground_truth)?;
    let grid = parse_grid(&read_text(grid)?).map_err(|e| CliError::Config(format!("{}: {e}", grid.display())))?;
    let table = with_threads(config, || eval::sweep(&gt, &graph, &sinks, &grid))?;
    match config.format.unwrap_or(Format::Csv) {
        Format::Json => Ok(output::render(&sweep_json(&table))),
        Format::Csv => sweep_csv(&table),
    }
}
