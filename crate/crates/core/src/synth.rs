//! The shipped fixture workspace and deterministic corpus generators.
//!
//! Five conflicts, three viewpoints, six outlets. Per-outlet document counts
//! follow the historical coverage of each conflict; a handful of documents
//! per collection carry seeded statements, everything else is neutral filler.

use std::collections::BTreeSet;

use chrono::{Days, NaiveDate};
use serde_json::json;

use crate::corpus::{CorpusError, CorpusStore, Document};
use crate::graph::{ingest_kg_str, KnowledgeGraph};

/// (outlet, short code, viewpoint)
pub const OUTLETS: [(&str, &str, &str); 6] = [
    ("New York Times", "nyt", "US"),
    ("Washington Post", "wapo", "US"),
    ("Daily Mail", "dm", "UK"),
    ("The Guardian", "grd", "UK"),
    ("RT", "rt", "RU"),
    ("Sputnik", "spk", "RU"),
];

pub struct FixtureEvent {
    pub label: &'static str,
    pub collection: &'static str,
    pub title: &'static str,
    pub start: &'static str,
    pub end: &'static str,
    /// Documents per outlet, in [`OUTLETS`] order.
    pub counts: [usize; 6],
}

pub const EVENTS: [FixtureEvent; 5] = [
    FixtureEvent {
        label: "CrimeaCrisis",
        collection: "crimea-docs",
        title: "Crimea",
        start: "2014-02-20",
        end: "2014-03-26",
        counts: [79, 79, 91, 78, 78, 79],
    },
    FixtureEvent {
        label: "GulfWar",
        collection: "gulf-docs",
        title: "Gulf",
        start: "1990-08-02",
        end: "1991-02-28",
        counts: [129, 83, 28, 51, 10, 8],
    },
    FixtureEvent {
        label: "IraqWar",
        collection: "iraq-docs",
        title: "Iraq",
        start: "2003-03-20",
        end: "2011-12-18",
        counts: [129, 106, 70, 127, 73, 10],
    },
    FixtureEvent {
        label: "RUC22",
        collection: "ruc22-docs",
        title: "Ukraine",
        start: "2021-03-01",
        end: "2022-02-23",
        counts: [79, 79, 66, 79, 78, 79],
    },
    FixtureEvent {
        label: "VietnamWar",
        collection: "vietnam-docs",
        title: "Vietnam",
        start: "1955-11-01",
        end: "1975-04-30",
        counts: [42, 54, 12, 1, 5, 1],
    },
];

/// A seeded document and what the baseline assessor should find in it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seed {
    pub collection: &'static str,
    pub outlet: &'static str,
    pub attribution: &'static str,
    /// `None` for decoys whose statement is negated.
    pub target: Option<&'static str>,
    pub sentence: &'static str,
}

const fn seed(
    collection: &'static str,
    outlet: &'static str,
    attribution: &'static str,
    target: Option<&'static str>,
    sentence: &'static str,
) -> Seed {
    Seed { collection, outlet, attribution, target, sentence }
}

const AGG: &str = "is_aggressor";

pub const SEEDS: &[Seed] = &[
    seed("ruc22-docs", "nyt", AGG, Some("Russia"), "Russia launched an offensive along the border, officials said."),
    seed("ruc22-docs", "nyt", AGG, Some("Russia"), "Moscow invaded the eastern provinces before dawn."),
    seed(
        "ruc22-docs",
        "nyt",
        "is_enemy",
        Some("Russia"),
        "The Kremlin is an enemy of open societies, the senator said.",
    ),
    seed("ruc22-docs", "nyt", AGG, None, "It is false that Ukraine attacked first."),
    seed("ruc22-docs", "wapo", AGG, Some("Russia"), "Russia attacked positions near the city."),
    seed("ruc22-docs", "wapo", "is_enemy", Some("Russia"), "Analysts say Russia is an enemy of the alliance."),
    seed("ruc22-docs", "dm", AGG, Some("Russia"), "Russia launched an invasion of its neighbour overnight."),
    seed("ruc22-docs", "dm", AGG, None, "Claims that Ukraine was an aggressor were lies, ministers said."),
    seed("ruc22-docs", "grd", AGG, Some("Russia"), "Moscow attacked the capital in the early hours."),
    seed("ruc22-docs", "rt", AGG, Some("Ukraine"), "Ukraine attacked the eastern republics, officials said."),
    seed("ruc22-docs", "rt", AGG, None, "Western claims that Russia was the aggressor are baseless."),
    seed("ruc22-docs", "spk", AGG, Some("Ukraine"), "Kyiv launched an offensive against civilians in the east."),
    seed("crimea-docs", "nyt", AGG, Some("Russia"), "Russia invaded the peninsula with unmarked troops."),
    seed(
        "crimea-docs",
        "nyt",
        "is_enemy",
        Some("Russia"),
        "Russia is an enemy of the postwar order, one official said.",
    ),
    seed("crimea-docs", "grd", AGG, Some("Russia"), "Moscow was the aggressor on the peninsula, diplomats said."),
    seed("crimea-docs", "rt", "is_threat", Some("Ukraine"), "Ukraine threatened the residents of the peninsula."),
    seed("gulf-docs", "nyt", AGG, Some("Iraq"), "Iraq invaded Kuwait in the early hours."),
    seed("gulf-docs", "dm", AGG, Some("Iraq"), "Baghdad launched an invasion of its small neighbour."),
    seed(
        "gulf-docs",
        "grd",
        "is_war_criminal",
        Some("Iraq"),
        "Iraq committed atrocities in the occupied city, witnesses said.",
    ),
    seed("gulf-docs", "rt", AGG, Some("Iraq"), "Iraq attacked its neighbour, the report said."),
    seed("iraq-docs", "nyt", "is_threat", Some("Iraq"), "Iraq poses a threat to the region, officials said."),
    seed("iraq-docs", "grd", AGG, Some("USA"), "The United States launched an invasion of the country."),
    seed("iraq-docs", "rt", "was_illegal", None, "Critics said the campaign was an illegal war."),
    seed("vietnam-docs", "nyt", AGG, Some("NorthVietnam"), "North Vietnam launched an offensive across the border."),
    seed("vietnam-docs", "wapo", AGG, Some("NorthVietnam"), "Hanoi attacked the southern provinces."),
];

const FILLER: [&str; 12] = [
    "Officials met on Tuesday to discuss the situation.",
    "Markets in the region were calm.",
    "Aid groups asked for more supplies.",
    "Talks are expected to resume next week.",
    "The foreign ministry issued a short statement.",
    "Reporters visited several towns in the area.",
    "Analysts expect further diplomatic contacts.",
    "Local residents described long queues for fuel.",
    "A spokesman declined to comment further.",
    "Prices for bread and fuel rose sharply.",
    "Parliament debated the budget for the coming year.",
    "Refugees continued to arrive at the border.",
];

fn day(s: &str) -> NaiveDate {
    s.parse().expect("fixture date")
}

fn filler(i: usize, n: usize) -> String {
    (0..n).map(|j| FILLER[(i * 7 + j * 5) % FILLER.len()]).collect::<Vec<_>>().join(" ")
}

/// Documents for one event, `scale` times the fixture counts; seeds come first per outlet.
pub fn event_documents(ev: &FixtureEvent, scale: usize) -> Vec<Document> {
    let span = (day(ev.end) - day(ev.start)).num_days().max(0) as u64 + 1;
    let mut docs = Vec::new();
    for (o, (outlet, code, viewpoint)) in OUTLETS.iter().enumerate() {
        let seeds: Vec<&Seed> = SEEDS.iter().filter(|s| s.collection == ev.collection && s.outlet == *code).collect();
        for i in 0..ev.counts[o] * scale {
            let body = match seeds.get(i) {
                Some(s) => format!("{} {}", s.sentence, filler(i + o, 2)),
                None => filler(i + o, 3),
            };
            docs.push(Document {
                doc_id: format!("{}-{code}-{i:04}", ev.collection.trim_end_matches("-docs")),
                collection: ev.collection.to_owned(),
                outlet: (*outlet).to_owned(),
                viewpoints: BTreeSet::from([(*viewpoint).to_owned()]),
                date: day(ev.start).checked_add_days(Days::new(i as u64 % span)),
                headline: format!("{} report {}", ev.title, i + 1),
                body,
            });
        }
    }
    docs
}

/// Doc id of the `n`-th seed of `outlet` in `collection`.
pub fn seed_doc_id(seed: &Seed) -> String {
    let n = SEEDS
        .iter()
        .filter(|s| s.collection == seed.collection && s.outlet == seed.outlet)
        .position(|s| s == seed)
        .expect("seed listed");
    format!("{}-{}-{n:04}", seed.collection.trim_end_matches("-docs"), seed.outlet)
}

pub fn fixture_documents() -> Vec<Document> {
    EVENTS.iter().flat_map(|e| event_documents(e, 1)).collect()
}

/// The fixture with every collection scaled to at least `min_per_collection` documents.
pub fn calibration_documents(min_per_collection: usize) -> Vec<Document> {
    EVENTS
        .iter()
        .flat_map(|e| {
            let total: usize = e.counts.iter().sum();
            event_documents(e, min_per_collection.div_ceil(total).max(1))
        })
        .collect()
}

pub fn fixture_corpus() -> CorpusStore {
    CorpusStore::from_documents(fixture_documents()).expect("fixture corpus is valid")
}

pub fn calibration_corpus() -> Result<CorpusStore, CorpusError> {
    CorpusStore::from_documents(calibration_documents(200))
}

/// JSONL of the fixture knowledge graph. `brownstown` adds an 1812 battle
/// with no document collection.
pub fn fixture_kg_jsonl(brownstown: bool) -> String {
    let mut recs = vec![
        json!({"record": "type", "id": "conflict"}),
        json!({"record": "type", "id": "war"}),
        json!({"record": "type", "id": "battle"}),
        json!({"record": "type", "id": "international_crisis"}),
        json!({"record": "type", "id": "riot"}),
        json!({"record": "type", "id": "election_fraud"}),
        json!({"record": "supertype", "child": "war", "parent": "conflict"}),
        json!({"record": "supertype", "child": "battle", "parent": "conflict"}),
        json!({"record": "supertype", "child": "international_crisis", "parent": "conflict"}),
        json!({"record": "role", "id": "winner"}),
        json!({"record": "role", "id": "loser"}),
    ];
    for ty in ["conflict", "war", "battle", "international_crisis"] {
        recs.push(json!({"record": "role_schema", "type": ty, "roles": ["winner", "loser"]}));
    }
    for (id, name, parent) in [
        ("southeast_asia", "Southeast Asia", None),
        ("vietnam", "Vietnam", Some("southeast_asia")),
        ("middle_east", "Middle East", None),
        ("kuwait", "Kuwait", Some("middle_east")),
        ("iraq", "Iraq", Some("middle_east")),
        ("eastern_europe", "Eastern Europe", None),
        ("ukraine", "Ukraine", Some("eastern_europe")),
        ("crimea", "Crimea", Some("ukraine")),
        ("north_america", "North America", None),
        ("michigan", "Michigan", Some("north_america")),
    ] {
        let mut r = json!({"record": "location", "id": id, "name": name});
        if let Some(p) = parent {
            r["parent"] = json!(p);
        }
        recs.push(r);
    }
    for (id, name) in [("US", "United States"), ("UK", "United Kingdom"), ("RU", "Russia")] {
        recs.push(json!({"record": "viewpoint", "id": id, "name": name}));
    }
    for (name, kind, subjectivity) in [
        ("is_underdog", "entity-in-event", "objective"),
        ("happened_during_cold_war", "event", "objective"),
        ("is_aggressor", "entity-in-event", "subjective"),
        ("is_threat", "entity-in-event", "subjective"),
        ("is_enemy", "entity-in-event", "subjective"),
        ("is_war_criminal", "entity-in-event", "subjective"),
        ("was_illegal", "event", "subjective"),
    ] {
        recs.push(json!({"record": "attribution", "name": name, "kind": kind, "subjectivity": subjectivity}));
    }
    let nukes = json!({"name": "possesses_nuclear_weapons", "value": true});
    let entities = [
        json!({"record": "entity", "id": "Russia", "name": "Russia",
            "aliases": ["Russian Federation", "Moscow", "Kremlin"], "attributes": [nukes]}),
        json!({"record": "entity", "id": "Ukraine", "name": "Ukraine", "aliases": ["Kyiv"], "attributes": [
            {"name": "possesses_nuclear_weapons", "value": false},
            {"name": "possesses_nuclear_weapons", "value": true, "time": {"start": "1991-12-26", "end": "1996-06-01"}}]}),
        json!({"record": "entity", "id": "USA", "name": "United States",
            "aliases": ["United States of America", "America"], "attributes": [nukes]}),
        json!({"record": "entity", "id": "UK", "name": "United Kingdom",
            "aliases": ["Britain", "London"], "attributes": [nukes]}),
        json!({"record": "entity", "id": "Iraq", "name": "Iraq", "aliases": ["Baghdad"], "attributes": [
            {"name": "under_sanctions", "value": true, "time": {"start": "1990-08-06", "end": "1995-12-31"}}]}),
        json!({"record": "entity", "id": "Kuwait", "name": "Kuwait", "aliases": ["Kuwait City"]}),
        json!({"record": "entity", "id": "NorthVietnam", "name": "North Vietnam", "aliases": ["Hanoi"]}),
    ];
    recs.extend(entities);
    let role = |e: &str, r: &str| json!({"entity": e, "role": r});
    for ev in &EVENTS {
        let (ty, loc, participants, roles) = match ev.label {
            "VietnamWar" => (
                "war",
                "vietnam",
                vec!["NorthVietnam", "USA"],
                vec![role("NorthVietnam", "winner"), role("USA", "loser")],
            ),
            "GulfWar" => (
                "war",
                "kuwait",
                vec!["Iraq", "Kuwait", "USA", "UK"],
                vec![role("Kuwait", "winner"), role("USA", "winner"), role("UK", "winner"), role("Iraq", "loser")],
            ),
            "IraqWar" => (
                "war",
                "iraq",
                vec!["USA", "UK", "Iraq"],
                vec![role("USA", "winner"), role("UK", "winner"), role("Iraq", "loser")],
            ),
            "CrimeaCrisis" => (
                "international_crisis",
                "crimea",
                vec!["Russia", "Ukraine"],
                vec![role("Russia", "winner"), role("Ukraine", "loser")],
            ),
            _ => ("international_crisis", "ukraine", vec!["Russia", "Ukraine"], vec![]),
        };
        recs.push(json!({"record": "event", "label": ev.label, "time": {"start": ev.start, "end": ev.end},
            "location": loc, "types": [ty], "participants": participants, "roles": roles}));
        recs.push(json!({"record": "collection_link", "event": ev.label, "collection": ev.collection}));
    }
    for (event, entity) in [("VietnamWar", "NorthVietnam"), ("IraqWar", "Iraq")] {
        recs.push(json!({"record": "objective", "attribution": "is_underdog", "event": event, "entity": entity}));
    }
    recs.push(json!({"record": "objective", "attribution": "happened_during_cold_war", "event": "VietnamWar"}));
    if brownstown {
        recs.push(json!({"record": "entity", "id": "TecumsehsConfederacy", "name": "Tecumseh's Confederacy",
            "aliases": ["Tecumseh"]}));
        recs.push(json!({"record": "event", "label": "BattleOfBrownstown", "time": {"point": "1812-08-05"},
            "location": "michigan", "types": ["battle"], "participants": ["TecumsehsConfederacy", "USA"],
            "roles": [role("TecumsehsConfederacy", "winner"), role("USA", "loser")]}));
        recs.push(json!({"record": "objective", "attribution": "is_underdog", "event": "BattleOfBrownstown",
            "entity": "TecumsehsConfederacy"}));
    }
    let mut out = String::new();
    for r in recs {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

pub fn fixture_kg(brownstown: bool) -> KnowledgeGraph {
    ingest_kg_str(&fixture_kg_jsonl(brownstown)).expect("fixture graph is valid")
}

pub const DVG: &str = "MATCH SUPERTYPE conflict BIND p WHERE role(p) = winner AND is_underdog(p)";
pub const DVG_A: &str = "MATCH SUPERTYPE conflict BIND p WHERE role(p) = winner AND is_underdog(p) AND is_aggressor(_)";
pub const RVU: &str = "MATCH EVENT RUC22 BIND x WHERE name(x) = \"Russia\" AND is_aggressor(x) FROM {US, UK}";
pub const CP: &str =
    "MATCH SUPERTYPE conflict WHERE is_aggressor(\"USA\") FROM {RU} AND is_enemy(\"Russia\") FROM {US}";

/// The four benchmark prototypes, by name.
pub const PROTOTYPES: [(&str, &str); 4] = [("DvG", DVG), ("DvG+A", DVG_A), ("RvU", RVU), ("CP", CP)];
