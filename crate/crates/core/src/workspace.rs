//! On-disk workspace.
//!
//! ```text
//! <root>/kg.jsonl                  validated graph snapshot
//! <root>/corpus.jsonl              validated corpus snapshot
//! <root>/config.toml               effective configuration
//! <root>/index.bin                 attribution index (after build-index)
//! <root>/logs/evaluations.jsonl    positives seen by queries, one per line
//! <root>/logs/runs.jsonl           one line per command with its effective config
//! ```

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::corpus::{ingest_corpus, CorpusError, CorpusStore};
use crate::graph::{ingest_kg, KgError, KnowledgeGraph};
use crate::index::{deserialize_index, serialize_index, AttributionIndexSet, CodecError, Positive};

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{}: file not found", .0.display())]
    Missing(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Graph { path: PathBuf, source: KgError },
    #[error("{}: {source}", path.display())]
    Corpus { path: PathBuf, source: CorpusError },
    #[error("{}: {source}", path.display())]
    Config { path: PathBuf, source: ConfigError },
    #[error("{}: {source}", path.display())]
    Index { path: PathBuf, source: CodecError },
    #[error("{}: line {line}: malformed evaluation log entry: {message}", path.display())]
    Log { path: PathBuf, line: usize, message: String },
}

impl WorkspaceError {
    /// True for problems with the machine rather than with the user's input.
    pub fn is_environment(&self) -> bool {
        matches!(
            self,
            WorkspaceError::Missing(_)
                | WorkspaceError::Io { .. }
                | WorkspaceError::Index { .. }
                | WorkspaceError::Graph { source: KgError::Io(_), .. }
                | WorkspaceError::Corpus { source: CorpusError::Io(_), .. }
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            WorkspaceError::Missing(path.to_owned())
        } else {
            WorkspaceError::Io { path: path.to_owned(), source }
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, WorkspaceError> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

pub fn load_config(path: &Path) -> Result<Config, WorkspaceError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Config::from_toml(&text).map_err(|source| WorkspaceError::Config { path: path.to_owned(), source })
}

#[derive(Clone, Debug, Serialize)]
pub struct IngestSummary {
    pub events: usize,
    pub entities: usize,
    pub documents: usize,
    pub collections: usize,
    pub dropped_documents: usize,
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct LogEntry {
    fingerprint: u64,
    #[serde(flatten)]
    positive: Positive,
}

pub struct Workspace {
    root: PathBuf,
}

pub struct Loaded {
    pub kg: KnowledgeGraph,
    pub corpus: CorpusStore,
    pub config: Config,
}

impl Workspace {
    pub fn at(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn kg_path(&self) -> PathBuf {
        self.root.join("kg.jsonl")
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.root.join("corpus.jsonl")
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join("index.bin")
    }

    pub fn evaluation_log_path(&self) -> PathBuf {
        self.root.join("logs").join("evaluations.jsonl")
    }

    pub fn run_log_path(&self) -> PathBuf {
        self.root.join("logs").join("runs.jsonl")
    }

    /// Validates the inputs and writes the snapshots. Nothing is written unless all inputs are valid.
    pub fn ingest(&self, kg: &Path, corpus: &Path, config: Option<&Path>) -> Result<IngestSummary, WorkspaceError> {
        let config = match config {
            Some(p) => load_config(p)?,
            None => Config::default(),
        };
        let graph = ingest_kg(open(kg)?).map_err(|source| WorkspaceError::Graph { path: kg.to_owned(), source })?;
        let known: BTreeSet<String> = graph.viewpoints().map(|v| v.id.clone()).collect();
        let store = ingest_corpus(open(corpus)?, &config.ingest_options(Some(known)))
            .map_err(|source| WorkspaceError::Corpus { path: corpus.to_owned(), source })?;

        let mut warnings: Vec<String> =
            graph.warnings().iter().map(|w| format!("event `{}`: {}", w.event, w.message)).collect();
        for ev in graph.events() {
            if let Ok(Some(c)) = graph.collection_of(ev.label()) {
                if store.collection(c).is_none() {
                    warnings.push(format!("event `{}` links collection `{c}`, which has no documents", ev.label()));
                }
            }
        }

        fs::create_dir_all(self.root.join("logs")).map_err(io_err(&self.root))?;
        self.write_with(&self.kg_path(), |w| graph.write_jsonl(w))?;
        self.write_with(&self.corpus_path(), |w| store.write_jsonl(w))?;
        self.write_with(&self.config_path(), |w| w.write_all(config.to_toml().as_bytes()))?;
        let stale = self.index_path();
        if stale.exists() {
            fs::remove_file(&stale).map_err(io_err(&stale))?;
        }
        Ok(IngestSummary {
            events: graph.event_count(),
            entities: graph.entity_count(),
            documents: store.len(),
            collections: store.collections().count(),
            dropped_documents: store.dropped(),
            warnings,
        })
    }

    fn write_with(
        &self,
        path: &Path,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), WorkspaceError> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
    }

    pub fn load(&self) -> Result<Loaded, WorkspaceError> {
        let config = load_config(&self.config_path())?;
        let kg_path = self.kg_path();
        let kg = ingest_kg(open(&kg_path)?).map_err(|source| WorkspaceError::Graph { path: kg_path, source })?;
        let corpus_path = self.corpus_path();
        let known: BTreeSet<String> = kg.viewpoints().map(|v| v.id.clone()).collect();
        let mut opts = config.ingest_options(Some(known));
        opts.dedup_headline_similarity = None;
        opts.date_window = None;
        let corpus = ingest_corpus(open(&corpus_path)?, &opts)
            .map_err(|source| WorkspaceError::Corpus { path: corpus_path, source })?;
        Ok(Loaded { kg, corpus, config })
    }

    /// The index, if one has been built.
    pub fn load_index(&self) -> Result<Option<AttributionIndexSet>, WorkspaceError> {
        let path = self.index_path();
        match fs::read(&path) {
            Ok(bytes) => deserialize_index(&bytes).map(Some).map_err(|source| WorkspaceError::Index { path, source }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(WorkspaceError::Io { path, source }),
        }
    }

    pub fn save_index(&self, index: &AttributionIndexSet) -> Result<u64, WorkspaceError> {
        let path = self.index_path();
        let bytes = serialize_index(index);
        fs::write(&path, &bytes).map_err(io_err(&path))?;
        Ok(bytes.len() as u64)
    }

    fn append(&self, path: &Path, lines: impl IntoIterator<Item = String>) -> Result<(), WorkspaceError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        for l in lines {
            writeln!(w, "{l}").map_err(io_err(path))?;
        }
        w.flush().map_err(io_err(path))
    }

    pub fn append_evaluations<'p>(
        &self,
        fingerprint: u64,
        positives: impl IntoIterator<Item = &'p Positive>,
    ) -> Result<(), WorkspaceError> {
        let lines = positives.into_iter().map(|p| {
            serde_json::to_string(&LogEntry { fingerprint, positive: p.clone() }).expect("log entry serializes")
        });
        self.append(&self.evaluation_log_path(), lines)
    }

    /// Logged positives recorded under `fingerprint`; entries from other settings are skipped.
    pub fn read_evaluations(&self, fingerprint: u64) -> Result<BTreeSet<Positive>, WorkspaceError> {
        let path = self.evaluation_log_path();
        let reader = match File::open(&path) {
            Ok(f) => BufReader::new(f),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(BTreeSet::new()),
            Err(source) => return Err(WorkspaceError::Io { path, source }),
        };
        let mut out = BTreeSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io_err(&path))?;
            if line.trim().is_empty() {
                continue;
            }
            let e: LogEntry = serde_json::from_str(&line).map_err(|e| WorkspaceError::Log {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if e.fingerprint == fingerprint {
                out.insert(e.positive);
            }
        }
        Ok(out)
    }

    pub fn log_run(&self, command: &str, config: &Config) -> Result<(), WorkspaceError> {
        let line = serde_json::json!({
            "command": command,
            "at": chrono::Utc::now().to_rfc3339(),
            "config": config,
        });
        self.append(&self.run_log_path(), [line.to_string()])
    }
}
