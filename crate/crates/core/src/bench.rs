//! Indexed versus full-scan benchmark.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::corpus::CorpusStore;
use crate::engine::{Engine, EngineError, QueryResult};
use crate::graph::KnowledgeGraph;
use crate::index::AttributionIndexSet;
use crate::witness::Assessor;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("prototypes file: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("prototypes file lists no prototypes")]
    Empty,
    #[error("prototype `{name}`: {source}")]
    Query { name: String, source: EngineError },
    #[error("prototype `{name}`: indexed run matched {indexed:?}, full scan matched {full:?}")]
    Divergence { name: String, indexed: Vec<String>, full: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prototype {
    pub name: String,
    pub query: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrototypeFile {
    #[serde(default)]
    prototype: Vec<Prototype>,
}

/// Parses a TOML file of `[[prototype]]` tables with `name` and `query`.
pub fn parse_prototypes(text: &str) -> Result<Vec<Prototype>, BenchError> {
    let file: PrototypeFile = toml::from_str(text)?;
    if file.prototype.is_empty() {
        return Err(BenchError::Empty);
    }
    Ok(file.prototype)
}

pub fn render_prototypes(prototypes: &[Prototype]) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        prototype: &'a [Prototype],
    }
    toml::to_string(&Out { prototype: prototypes }).expect("prototypes serialize")
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub repeat: usize,
    /// Each timed sample repeats the query until this much time has passed.
    pub min_sample: Duration,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { repeat: 5, min_sample: Duration::from_millis(100) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PrototypeBench {
    pub name: String,
    pub query: String,
    pub matched: Vec<String>,
    pub indexed_ms: f64,
    pub full_ms: f64,
    pub indexed_documents: usize,
    pub full_documents: usize,
    pub index_prunes: usize,
    pub speedup: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub repeat: usize,
    pub prototypes: Vec<PrototypeBench>,
    /// Total full-scan time over total indexed time, from the medians.
    pub aggregate_speedup: f64,
}

pub fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn sample(engine: &Engine<'_>, name: &str, query: &str, min: Duration) -> Result<(f64, QueryResult), BenchError> {
    let wrap = |source| BenchError::Query { name: name.to_owned(), source };
    let plan = engine.plan(query).map_err(wrap)?;
    let start = Instant::now();
    let mut runs = 0u32;
    loop {
        let r = engine.execute(&plan).map_err(wrap)?;
        runs += 1;
        if start.elapsed() >= min {
            return Ok((start.elapsed().as_secs_f64() * 1e3 / f64::from(runs), r));
        }
    }
}

fn labels(r: &QueryResult) -> Vec<String> {
    r.matched_events().into_iter().map(str::to_owned).collect()
}

/// Runs every prototype `repeat` times in both modes, alternating which mode goes first.
pub fn run_bench(
    kg: &KnowledgeGraph,
    corpus: &CorpusStore,
    assessor: &dyn Assessor,
    config: &Config,
    index: &AttributionIndexSet,
    prototypes: &[Prototype],
    opts: &BenchOptions,
) -> Result<BenchReport, BenchError> {
    let full = Engine::new(kg, corpus, assessor, config);
    let indexed = Engine::new(kg, corpus, assessor, config).with_index(Some(index));
    let repeat = opts.repeat.max(1);
    let mut out = Vec::new();
    for p in prototypes {
        let mut times_i = Vec::with_capacity(repeat);
        let mut times_f = Vec::with_capacity(repeat);
        let mut last = None;
        for r in 0..repeat {
            let (ti, ri, tf, rf) = if r % 2 == 0 {
                let (tf, rf) = sample(&full, &p.name, &p.query, opts.min_sample)?;
                let (ti, ri) = sample(&indexed, &p.name, &p.query, opts.min_sample)?;
                (ti, ri, tf, rf)
            } else {
                let (ti, ri) = sample(&indexed, &p.name, &p.query, opts.min_sample)?;
                let (tf, rf) = sample(&full, &p.name, &p.query, opts.min_sample)?;
                (ti, ri, tf, rf)
            };
            let (li, lf) = (labels(&ri), labels(&rf));
            if li != lf {
                return Err(BenchError::Divergence { name: p.name.clone(), indexed: li, full: lf });
            }
            times_i.push(ti);
            times_f.push(tf);
            last = Some((ri, rf));
        }
        let (ri, rf) = last.expect("at least one repeat");
        let (indexed_ms, full_ms) = (median(&mut times_i), median(&mut times_f));
        out.push(PrototypeBench {
            name: p.name.clone(),
            query: p.query.clone(),
            matched: labels(&ri),
            indexed_ms,
            full_ms,
            indexed_documents: ri.counters.documents_assessed,
            full_documents: rf.counters.documents_assessed,
            index_prunes: ri.counters.index_prunes,
            speedup: full_ms / indexed_ms,
        });
    }
    let total_f: f64 = out.iter().map(|p| p.full_ms).sum();
    let total_i: f64 = out.iter().map(|p| p.indexed_ms).sum();
    Ok(BenchReport { repeat, prototypes: out, aggregate_speedup: total_f / total_i })
}
