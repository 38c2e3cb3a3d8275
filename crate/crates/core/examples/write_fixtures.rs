//! Regenerates the files under `fixtures/`.
//!
//! cargo run -p narratekg-core --example write_fixtures -- fixtures

use std::fs;
use std::path::PathBuf;

use narratekg::bench::{render_prototypes, Prototype};
use narratekg::config::Config;
use narratekg::corpus::CorpusStore;
use narratekg::synth;

fn corpus_jsonl(store: &CorpusStore) -> Vec<u8> {
    let mut buf = Vec::new();
    store.write_jsonl(&mut buf).expect("in-memory write");
    buf
}

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("kg.jsonl"), synth::fixture_kg_jsonl(false))?;
    fs::write(dir.join("kg-brownstown.jsonl"), synth::fixture_kg_jsonl(true))?;
    fs::write(dir.join("corpus.jsonl"), corpus_jsonl(&synth::fixture_corpus()))?;
    let cal = synth::calibration_corpus().expect("calibration corpus is valid");
    fs::write(dir.join("calibration-corpus.jsonl"), corpus_jsonl(&cal))?;
    fs::write(dir.join("config.toml"), Config::default().to_toml())?;
    let protos: Vec<Prototype> =
        synth::PROTOTYPES.iter().map(|(n, q)| Prototype { name: n.to_string(), query: q.to_string() }).collect();
    fs::write(dir.join("prototypes.toml"), render_prototypes(&protos))?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
