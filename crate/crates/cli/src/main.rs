use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use narratekg::bench::{parse_prototypes, run_bench, BenchError, BenchOptions, BenchReport};
use narratekg::config::{AssessorKind, Config};
use narratekg::engine::{build_index_from_corpus, index_from_positives, Engine, EngineError, QueryResult};
use narratekg::index::AttributionIndexSet;
use narratekg::witness::{Assessor, DelayedAssessor, LexiconAssessor, RemoteAssessor};
use narratekg::workspace::{Loaded, Workspace, WorkspaceError};

#[derive(Parser)]
#[command(name = "narratekg", version, about = "Narrative prototype queries over an event knowledge graph")]
struct Cli {
    /// Workspace directory holding snapshots, config, index and logs.
    #[arg(long, short = 'w', global = true, default_value = "workspace")]
    workspace: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a graph and a corpus and snapshot them into the workspace.
    Ingest {
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Build the attribution index.
    BuildIndex {
        /// Target false-positive rate per filter.
        #[arg(long, value_parser = parse_fpr)]
        fpr: Option<f64>,
        /// Minimum capacity each filter is sized for.
        #[arg(long)]
        capacity: Option<u64>,
        #[arg(long, value_enum, default_value_t = Source::Scan)]
        source: Source,
    },
    /// Evaluate a prototype. Without a query, reads one prototype per line from standard input.
    Query {
        query: Option<String>,
        #[arg(long, conflicts_with = "query")]
        file: Option<PathBuf>,
        #[arg(long)]
        no_index: bool,
        /// Write the full JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time prototypes with and without the index.
    Bench {
        prototypes: PathBuf,
        #[arg(long, default_value_t = 5)]
        repeat: usize,
        /// Extra cost per document assessment, in milliseconds.
        #[arg(long, default_value_t = 0)]
        assessor_delay: u64,
        /// Minimum duration of one timed sample, in milliseconds.
        #[arg(long, default_value_t = 100)]
        min_sample: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    /// Assess the whole corpus.
    Scan,
    /// Replay positives recorded by earlier queries.
    Log,
}

fn parse_fpr(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(format!("must lie strictly between 0 and 1, got {p}"))
    }
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

type CmdResult = Result<(), Failure>;

trait Classify<T> {
    fn user(self) -> Result<T, Failure>;
    fn env(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn user(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: 1, error: e.into() })
    }
    fn env(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: 2, error: e.into() })
    }
}

fn workspace_failure(e: WorkspaceError) -> Failure {
    Failure { code: if e.is_environment() { 2 } else { 1 }, error: e.into() }
}

fn engine_failure(e: EngineError, source: &str) -> Failure {
    match e {
        EngineError::Parse(p) => {
            Failure { code: 1, error: anyhow!("{}", p.diagnostic(source).trim_start_matches("error: ")) }
        }
        EngineError::Plan(_) | EngineError::Graph(_) => Failure { code: 1, error: e.into() },
        EngineError::Assessor { .. } => Failure { code: 2, error: e.into() },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let ws = Workspace::at(&cli.workspace);
    let result = match cli.command {
        Command::Ingest { kg, corpus, config } => ingest(&ws, &kg, &corpus, config.as_deref()),
        Command::BuildIndex { fpr, capacity, source } => build_index(&ws, fpr, capacity, source),
        Command::Query { query: text, file, no_index, report } => query(&ws, text, file, no_index, report),
        Command::Bench { prototypes, repeat, assessor_delay, min_sample, report } => {
            bench(&ws, &prototypes, repeat, assessor_delay, min_sample, report)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn ingest(ws: &Workspace, kg: &Path, corpus: &Path, config: Option<&Path>) -> CmdResult {
    let s = ws.ingest(kg, corpus, config).map_err(workspace_failure)?;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "ingested {} events, {} entities, {} documents in {} collections ({} dropped) into {}",
        s.events,
        s.entities,
        s.documents,
        s.collections,
        s.dropped_documents,
        ws.root().display()
    );
    Ok(())
}

fn load(ws: &Workspace) -> Result<Loaded, Failure> {
    if !ws.config_path().exists() {
        return Err(Failure {
            code: 2,
            error: anyhow!("{} is not an ingested workspace; run `narratekg ingest` first", ws.root().display()),
        });
    }
    ws.load().map_err(workspace_failure)
}

fn assessor(cfg: &Config) -> Result<Box<dyn Assessor>, Failure> {
    match cfg.assessment.assessor {
        AssessorKind::Baseline => Ok(Box::new(LexiconAssessor::from_config(cfg))),
        AssessorKind::Remote => {
            let remote = RemoteAssessor::new(&cfg.remote.url, Duration::from_millis(cfg.remote.timeout_ms));
            remote.health().with_context(|| format!("assessor service at {} is not ready", cfg.remote.url)).env()?;
            Ok(Box::new(remote))
        }
    }
}

fn build_index(ws: &Workspace, fpr: Option<f64>, capacity: Option<u64>, source: Source) -> CmdResult {
    let Loaded { kg, corpus, mut config } = load(ws)?;
    if let Some(p) = fpr {
        config.index.target_fpr = p;
    }
    if capacity.is_some() {
        config.index.capacity_hint = capacity;
    }
    ws.log_run("build-index", &config).map_err(workspace_failure)?;
    let index = match source {
        Source::Scan => {
            let a = assessor(&config)?;
            build_index_from_corpus(&kg, &corpus, a.as_ref(), &config).map_err(|e| match e {
                narratekg::engine::ScanBuildError::Scan(EngineError::Assessor { .. }) => {
                    Failure { code: 2, error: e.into() }
                }
                other => Failure { code: 1, error: other.into() },
            })?
        }
        Source::Log => {
            eprintln!("warning: a log-built index is only sound if logged queries assessed the whole corpus");
            let positives = ws.read_evaluations(config.assessment_fingerprint()).map_err(workspace_failure)?;
            index_from_positives(&kg, &positives, &config).user()?
        }
    };
    let bytes = ws.save_index(&index).map_err(workspace_failure)?;
    print!("{}", index_summary(&index));
    println!("wrote {} ({bytes} bytes, {} filters)", ws.index_path().display(), index.filter_count());
    Ok(())
}

fn index_summary(index: &AttributionIndexSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<28} {:<6} {:>6} {:>8} {:>3}", "attribution", "view", "n", "m", "k");
    for (a, f) in index.coarse_filters() {
        let _ = writeln!(out, "{:<28} {:<6} {:>6} {:>8} {:>3}", a, "*", f.inserted(), f.bit_len(), f.hash_count());
        for (_, v, ff) in index.fine_filters().filter(|(fa, _, _)| *fa == a) {
            let _ =
                writeln!(out, "{:<28} {:<6} {:>6} {:>8} {:>3}", "", v, ff.inserted(), ff.bit_len(), ff.hash_count());
        }
    }
    out
}

fn query(
    ws: &Workspace,
    text: Option<String>,
    file: Option<PathBuf>,
    no_index: bool,
    report: Option<PathBuf>,
) -> CmdResult {
    let Loaded { kg, corpus, config } = load(ws)?;
    ws.log_run("query", &config).map_err(workspace_failure)?;
    let index = if no_index { None } else { ws.load_index().map_err(workspace_failure)? };
    let a = assessor(&config)?;
    let engine = Engine::new(&kg, &corpus, a.as_ref(), &config).with_index(index.as_ref());
    let fingerprint = config.assessment_fingerprint();
    let run = |q: &str| -> Result<QueryResult, Failure> {
        let r = engine.query(q).map_err(|e| engine_failure(e, q))?;
        ws.append_evaluations(fingerprint, &r.positives).map_err(workspace_failure)?;
        Ok(r)
    };

    let single = match (text, file) {
        (Some(t), _) => Some(t),
        (None, Some(p)) => Some(fs::read_to_string(&p).with_context(|| format!("{}", p.display())).env()?),
        (None, None) => None,
    };
    if let Some(q) = single {
        let r = run(&q)?;
        print!("{}", render(&r));
        if let Some(path) = report {
            let json = serde_json::to_string_pretty(&r).expect("result serializes");
            fs::write(&path, json + "\n").with_context(|| format!("{}", path.display())).env()?;
        }
        return Ok(());
    }

    let stdin = io::stdin();
    let mut reports = Vec::new();
    for line in stdin.lock().lines() {
        let line = line.context("reading standard input").env()?;
        let q = line.trim();
        if q.is_empty() || q.starts_with('#') {
            continue;
        }
        match run(q) {
            Ok(r) => {
                print!("{}", render(&r));
                reports.push(r);
            }
            Err(f) if f.code == 1 => eprintln!("error: {:#}", f.error),
            Err(f) => return Err(f),
        }
        let _ = io::stdout().flush();
    }
    if let Some(path) = report {
        let json = serde_json::to_string_pretty(&reports).expect("results serialize");
        fs::write(&path, json + "\n").with_context(|| format!("{}", path.display())).env()?;
    }
    Ok(())
}

fn render(r: &QueryResult) -> String {
    let mut out = String::new();
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for m in &r.matches {
        let binds: Vec<String> = m.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        if binds.is_empty() {
            let _ = writeln!(out, "{}", m.event);
        } else {
            let _ = writeln!(out, "{}  {}", m.event, binds.join(" "));
        }
        for j in &m.justification {
            let _ = writeln!(out, "  - {j}");
        }
        for e in m.evidence.iter().filter(|e| e.holds) {
            let who = e.participant.as_deref().map(|p| format!(" for {p}")).unwrap_or_default();
            let docs: Vec<String> = e.witnesses.iter().map(|w| format!("{} ({:.2})", w.doc_id, w.rank_score)).collect();
            let _ = writeln!(out, "  - {}{who} [{}]: {}", e.atom, e.viewpoint, docs.join(", "));
        }
    }
    let c = &r.counters;
    let _ = writeln!(
        out,
        "{} match(es); candidates {} -> {} objective -> {} index; {} prunes, {} documents assessed, {:.1} ms",
        c.matched,
        c.pattern_candidates,
        c.after_objective,
        c.after_index,
        c.index_prunes,
        c.documents_assessed,
        r.timings.total_ms
    );
    out
}

fn bench(
    ws: &Workspace,
    prototypes: &Path,
    repeat: usize,
    delay_ms: u64,
    min_sample: u64,
    report: Option<PathBuf>,
) -> CmdResult {
    let text = fs::read_to_string(prototypes).with_context(|| format!("{}", prototypes.display())).env()?;
    let protos = parse_prototypes(&text).with_context(|| format!("{}", prototypes.display())).user()?;
    let Loaded { kg, corpus, config } = load(ws)?;
    ws.log_run("bench", &config).map_err(workspace_failure)?;
    let index = ws
        .load_index()
        .map_err(workspace_failure)?
        .ok_or_else(|| anyhow!("no index in {}; run `narratekg build-index` first", ws.root().display()))
        .env()?;
    if index.fingerprint() != config.assessment_fingerprint() {
        return Err(anyhow!("index was built under different assessment settings; rebuild it")).env();
    }
    let inner = assessor(&config)?;
    let delayed = DelayedAssessor::new(inner, Duration::from_millis(delay_ms));
    let opts = BenchOptions { repeat, min_sample: Duration::from_millis(min_sample) };
    let r = run_bench(&kg, &corpus, &delayed, &config, &index, &protos, &opts).map_err(|e| match e {
        BenchError::Divergence { .. } => Failure { code: 3, error: e.into() },
        BenchError::Query { source: EngineError::Assessor { .. }, .. } => Failure { code: 2, error: e.into() },
        other => Failure { code: 1, error: other.into() },
    })?;
    print!("{}", render_bench(&r));
    if let Some(path) = report {
        let json = serde_json::to_string_pretty(&r).expect("report serializes");
        fs::write(&path, json + "\n").with_context(|| format!("{}", path.display())).env()?;
    }
    Ok(())
}

fn render_bench(r: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>12} {:>12} {:>8} {:>10} {:>10} {:>7}  matched",
        "prototype", "indexed ms", "full ms", "speedup", "docs idx", "docs full", "prunes"
    );
    for p in &r.prototypes {
        let _ = writeln!(
            out,
            "{:<10} {:>12.3} {:>12.3} {:>7.2}x {:>10} {:>10} {:>7}  {}",
            p.name,
            p.indexed_ms,
            p.full_ms,
            p.speedup,
            p.indexed_documents,
            p.full_documents,
            p.index_prunes,
            p.matched.join(",")
        );
    }
    let _ = writeln!(out, "aggregate speedup {:.2}x (medians of {} repeats)", r.aggregate_speedup, r.repeat);
    out
}
