//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config as RunnerConfig, TestCaseError, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use narratekg::bench::{parse_prototypes, run_bench, BenchOptions};
use narratekg::config::Config;
use narratekg::corpus::{ingest_corpus_str, CorpusStore};
use narratekg::dsl::{parse, render};
use narratekg::engine::{build_index_from_corpus, Engine};
use narratekg::graph::{ingest_kg_str, KnowledgeGraph};
use narratekg::index::BloomFilter;
use narratekg::synth::{self, DVG, RVU, SEEDS};
use narratekg::witness::{DelayedAssessor, LexiconAssessor};

use common::{arb_prototype, differential_case, labels, monotonicity_case, VIEWPOINTS};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture_text(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn fixture_kg(name: &str) -> KnowledgeGraph {
    ingest_kg_str(&fixture_text(name)).expect("shipped graph loads")
}

fn fixture_corpus(name: &str) -> CorpusStore {
    ingest_corpus_str(&fixture_text(name), &Config::default().ingest_options(None)).expect("shipped corpus loads")
}

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn fixture_query() -> Outcome {
    let corpus = fixture_corpus("corpus.jsonl");
    let cfg = Config::default();
    let assessor = LexiconAssessor::from_config(&cfg);
    let mut details = Vec::new();
    for (kg_file, want) in
        [("kg.jsonl", set(&["VietnamWar"])), ("kg-brownstown.jsonl", set(&["BattleOfBrownstown", "VietnamWar"]))]
    {
        let kg = fixture_kg(kg_file);
        let start = Instant::now();
        let r = Engine::new(&kg, &corpus, &assessor, &cfg).query(DVG).map_err(|e| e.to_string())?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let got = labels(&r);
        if got != want {
            return Err(format!("{kg_file}: DvG matched {got:?}, expected {want:?}"));
        }
        if ms >= 1000.0 {
            return Err(format!("{kg_file}: DvG took {ms:.1} ms"));
        }
        details.push(format!("{kg_file} -> {got:?} in {ms:.2} ms"));
    }
    Ok(details.join("; "))
}

fn subjective_semantics() -> Outcome {
    let kg = fixture_kg("kg.jsonl");
    let docs = synth::fixture_documents();
    let positives = |v: &str| -> Vec<String> {
        SEEDS
            .iter()
            .filter(|s| s.collection == "ruc22-docs" && s.attribution == "is_aggressor" && s.target == Some("Russia"))
            .filter(|s| synth::OUTLETS.iter().any(|o| o.1 == s.outlet && o.2 == v))
            .map(synth::seed_doc_id)
            .collect()
    };
    let (us, uk) = (positives("US"), positives("UK"));
    let mut checked = 0;
    for min_witnesses in 1..=3 {
        let mut cfg = Config::default();
        cfg.assessment.min_witnesses = min_witnesses;
        let assessor = LexiconAssessor::from_config(&cfg);
        for dropped in 0..=uk.len() {
            let gone: BTreeSet<&String> = uk.iter().take(dropped).collect();
            let corpus = CorpusStore::from_documents(docs.iter().filter(|d| !gone.contains(&d.doc_id)).cloned())
                .map_err(|e| e.to_string())?;
            let expected = us.len() >= min_witnesses && uk.len() - dropped >= min_witnesses;
            let r = Engine::new(&kg, &corpus, &assessor, &cfg).query(RVU).map_err(|e| e.to_string())?;
            let matched = labels(&r) == set(&["RUC22"]);
            if matched != expected || (!matched && !r.matches.is_empty()) {
                return Err(format!(
                    "min_witnesses {min_witnesses}, {dropped} UK positives removed: matched {:?}, oracle says {expected}",
                    labels(&r)
                ));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "seeded US {}, UK {}; {checked} threshold/deletion combinations agree with the seed count",
        us.len(),
        uk.len()
    ))
}

const EXISTENTIAL: [&str; 6] = [
    "MATCH SUPERTYPE conflict BIND x WHERE is_aggressor(x){FROM}",
    "MATCH SUPERTYPE conflict WHERE is_aggressor(_){FROM}",
    "MATCH SUPERTYPE conflict WHERE was_illegal(){FROM}",
    "MATCH SUPERTYPE conflict BIND x WHERE is_enemy(x){FROM} AND role(x) = winner",
    "MATCH TYPE war WHERE is_aggressor(\"Russia\"){FROM}",
    "MATCH SUPERTYPE conflict WHERE is_enemy(\"Russia\"){FROM}",
];

fn viewpoint_existential() -> Outcome {
    let mut runs = 0;
    for kg_file in ["kg.jsonl", "kg-brownstown.jsonl"] {
        let kg = fixture_kg(kg_file);
        for corpus_file in ["corpus.jsonl", "calibration-corpus.jsonl"] {
            let corpus = fixture_corpus(corpus_file);
            for min_witnesses in [1, 2] {
                let mut cfg = Config::default();
                cfg.assessment.min_witnesses = min_witnesses;
                let assessor = LexiconAssessor::from_config(&cfg);
                let engine = Engine::new(&kg, &corpus, &assessor, &cfg);
                for t in EXISTENTIAL {
                    let q = |from: &str| -> Result<BTreeSet<String>, String> {
                        engine.query(&t.replace("{FROM}", from)).map(|r| labels(&r)).map_err(|e| e.to_string())
                    };
                    let unqualified = q("")?;
                    let mut union = BTreeSet::new();
                    for v in VIEWPOINTS {
                        union.extend(q(&format!(" FROM {{{v}}}"))?);
                    }
                    if unqualified != union {
                        return Err(format!("{kg_file} + {corpus_file}: {t}: {unqualified:?} != {union:?}"));
                    }
                    runs += 1;
                }
            }
        }
    }
    Ok(format!("{runs} atom/fixture combinations equal"))
}

fn index_soundness() -> Outcome {
    let (mut matched, mut pruned) = (0, 0);
    for case in 0..200 {
        let o = differential_case(case)?;
        matched += usize::from(o.matched);
        pruned += usize::from(o.pruned);
    }
    Ok(format!("200 prototypes, 0 divergences ({matched} non-empty, {pruned} with index prunes)"))
}

fn bloom() -> Outcome {
    let target = 0.01;
    let mut rng = StdRng::seed_from_u64(0xb100);
    let mut f = BloomFilter::with_rate(100_000, target, rng.gen());
    let keys: Vec<[u8; 9]> = (0..100_000).map(|_| key(0, rng.gen())).collect();
    for k in &keys {
        f.insert(k);
    }
    let misses = keys.iter().filter(|k| !f.contains(&k[..])).count();
    if misses > 0 {
        return Err(format!("{misses} false negatives"));
    }
    let hits = (0..100_000).filter(|_| f.contains(&key(1, rng.gen()))).count();
    let fpr = hits as f64 / 1e5;
    let detail = format!(
        "0 false negatives; FPR {fpr:.4} (limit {:.2}), m = {}, k = {}",
        2.0 * target,
        f.bit_len(),
        f.hash_count()
    );
    if fpr <= 2.0 * target {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Inserted and probed keys differ in their first byte, so probes are known to be absent.
fn key(tag: u8, n: u64) -> [u8; 9] {
    let mut k = [tag; 9];
    k[1..].copy_from_slice(&n.to_le_bytes());
    k
}

fn speedup() -> Outcome {
    let start = Instant::now();
    let kg = fixture_kg("kg.jsonl");
    let corpus = fixture_corpus("calibration-corpus.jsonl");
    let smallest = corpus.collections().map(|c| c.doc_ids.len()).min().unwrap_or(0);
    if smallest < 200 {
        return Err(format!("calibration collections must hold at least 200 documents, smallest has {smallest}"));
    }
    let cfg = Config::default();
    let lexicon = LexiconAssessor::from_config(&cfg);
    let index = build_index_from_corpus(&kg, &corpus, &lexicon, &cfg).map_err(|e| e.to_string())?;
    let delayed = DelayedAssessor::new(LexiconAssessor::from_config(&cfg), Duration::from_millis(10));
    let prototypes = parse_prototypes(&fixture_text("prototypes.toml")).map_err(|e| e.to_string())?;
    let opts = BenchOptions { repeat: 7, min_sample: Duration::from_millis(200) };
    let report = run_bench(&kg, &corpus, &delayed, &cfg, &index, &prototypes, &opts).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let dvg = report.prototypes.iter().find(|p| p.name == "DvG").ok_or("no DvG prototype")?;
    let dvg_ratio = dvg.indexed_ms / dvg.full_ms;
    let per: Vec<String> = report.prototypes.iter().map(|p| format!("{} {:.2}x", p.name, p.speedup)).collect();
    let detail = format!(
        "aggregate {:.2}x (need >= 2); DvG indexed/full {dvg_ratio:.3} (need within 10%); {}; {secs:.1} s",
        report.aggregate_speedup,
        per.join(", ")
    );
    if report.aggregate_speedup >= 2.0 && (dvg_ratio - 1.0).abs() <= 0.10 && secs < 120.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mutate(rng: &mut StdRng, seed: &str) -> String {
    const PIECES: [&str; 16] = [
        "(",
        ")",
        "{",
        "}",
        ",",
        "_",
        "\"",
        "NOT ",
        " AND ",
        " OR ",
        "FROM",
        "=",
        "-",
        "9999999999999999999999",
        "\\",
        "é",
    ];
    let mut s: Vec<char> = seed.chars().collect();
    for _ in 0..rng.gen_range(1..6) {
        let at = rng.gen_range(0..=s.len());
        match rng.gen_range(0..4) {
            0 if at < s.len() => {
                s.remove(at);
            }
            1 => s.splice(at..at, PIECES[rng.gen_range(0..PIECES.len())].chars()).for_each(drop),
            2 => s.insert(at, char::from_u32(rng.gen_range(0..0x3000)).unwrap_or('?')),
            _ => s.truncate(at),
        }
    }
    s.into_iter().collect()
}

fn parser() -> Outcome {
    let mut runner =
        TestRunner::new(RunnerConfig { cases: 1000, failure_persistence: None, ..RunnerConfig::default() });
    runner
        .run(&arb_prototype(), |ast| {
            let text = render(&ast);
            match parse(&text) {
                Ok(back) if back == ast => Ok(()),
                Ok(back) => Err(TestCaseError::fail(format!("{text} re-parsed as {back:?}"))),
                Err(e) => Err(TestCaseError::fail(e.diagnostic(&text))),
            }
        })
        .map_err(|e| format!("round trip: {e}"))?;

    let seeds: Vec<&str> = synth::PROTOTYPES.iter().map(|p| p.1).collect();
    let mut rng = StdRng::seed_from_u64(0xf022);
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut panics = 0;
    for i in 0..100_000 {
        let input = if i % 4 == 0 {
            let len = rng.gen_range(0..64);
            (0..len).map(|_| char::from_u32(rng.gen_range(0..0x250)).unwrap_or(' ')).collect()
        } else {
            mutate(&mut rng, seeds[i % seeds.len()])
        };
        if panic::catch_unwind(|| parse(&input).map_err(|e| e.diagnostic(&input))).is_err() {
            panics += 1;
        }
    }
    panic::set_hook(hook);
    if panics > 0 {
        return Err(format!("{panics} of 100000 fuzz inputs panicked"));
    }
    Ok("1000 ASTs round-trip; 100000 fuzz inputs, 0 panics".into())
}

fn monotonicity() -> Outcome {
    let (mut corpora, mut grew, mut seed) = (0, 0, 0x3030u64);
    while corpora < 100 {
        if let Some(g) = monotonicity_case(seed)? {
            corpora += 1;
            grew += usize::from(g);
        }
        seed += 1;
    }
    Ok(format!("100 corpora, no true->false flips ({grew} gained a match)"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("fixture-query correctness", fixture_query),
        ("subjective semantics", subjective_semantics),
        ("viewpoint-existential semantics", viewpoint_existential),
        ("index soundness", index_soundness),
        ("bloom no false negatives", bloom),
        ("speedup", speedup),
        ("parser round-trip", parser),
        ("witness monotonicity", monotonicity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
