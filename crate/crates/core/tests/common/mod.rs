#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::json;

use narratekg::config::Config;
use narratekg::corpus::{CorpusStore, Document};
use narratekg::dsl::{
    AttributeTarget, Comparator, EventFunction, EventPattern, Expr, Literal, PrototypeAst, RefinementAtom, Term,
};
use narratekg::engine::{build_index_from_corpus, Engine, QueryResult};
use narratekg::graph::{ingest_kg_str, KnowledgeGraph};
use narratekg::witness::LexiconAssessor;

pub const VIEWPOINTS: [&str; 3] = ["US", "UK", "RU"];

const ENTITY_POOL: [(&str, &str, &[&str]); 8] = [
    ("Russia", "Russia", &["Moscow", "Kremlin"]),
    ("Ukraine", "Ukraine", &["Kyiv"]),
    ("USA", "United States", &["America"]),
    ("UK", "United Kingdom", &["Britain", "London"]),
    ("Iraq", "Iraq", &["Baghdad"]),
    ("Kuwait", "Kuwait", &[]),
    ("NorthVietnam", "North Vietnam", &["Hanoi"]),
    ("France", "France", &["Paris"]),
];

const AGGRESSION: [&str; 3] = ["invaded the region", "attacked the border posts", "launched an offensive"];
const FILLER: [&str; 4] = [
    "Officials met on Tuesday.",
    "Markets were calm.",
    "Aid groups asked for more supplies.",
    "Talks resume next week.",
];

pub struct RandomWorkspace {
    pub kg: KnowledgeGraph,
    pub corpus: CorpusStore,
    pub config: Config,
    pub entities: Vec<&'static str>,
    pub events: Vec<String>,
    /// (label, collection) for events with documents linked.
    pub collections: Vec<(String, String)>,
}

impl RandomWorkspace {
    pub fn engine<'a>(&'a self, assessor: &'a LexiconAssessor) -> Engine<'a> {
        Engine::new(&self.kg, &self.corpus, assessor, &self.config)
    }

    pub fn assessor(&self) -> LexiconAssessor {
        LexiconAssessor::from_config(&self.config)
    }
}

fn alias_of(rng: &mut StdRng, id: &str) -> String {
    let (_, name, aliases) = ENTITY_POOL.iter().find(|e| e.0 == id).unwrap();
    let mut all = vec![*name];
    all.extend(aliases.iter());
    all.choose(rng).unwrap().to_string()
}

/// A sentence about `entity` for `attribution`; `negated` inserts a cue before the signal.
pub fn statement(rng: &mut StdRng, attribution: &str, entity: &str, negated: bool) -> String {
    let who = alias_of(rng, entity);
    let lead = if negated { "It is false that " } else { "" };
    match attribution {
        "is_aggressor" => format!("{lead}{who} {}.", AGGRESSION.choose(rng).unwrap()),
        "is_enemy" => format!("{lead}{who} is an enemy of the region."),
        _ => format!("{lead}Critics said {who} fought an illegal war."),
    }
}

pub fn random_document(rng: &mut StdRng, id: usize, ws_entities: &[&str], collection: &str) -> Document {
    let mut sentences = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let roll: f64 = rng.gen();
        let s = if roll < 0.45 {
            let attribution = ["is_aggressor", "is_enemy", "was_illegal"].choose(rng).unwrap();
            let e = ws_entities.choose(rng).unwrap();
            let negated = rng.gen_bool(0.2);
            statement(rng, attribution, e, negated)
        } else {
            FILLER.choose(rng).unwrap().to_string()
        };
        sentences.push(s);
    }
    let mut viewpoints: BTreeSet<String> =
        VIEWPOINTS.iter().filter(|_| rng.gen_bool(0.4)).map(|v| v.to_string()).collect();
    if viewpoints.is_empty() {
        viewpoints.insert(VIEWPOINTS.choose(rng).unwrap().to_string());
    }
    Document {
        doc_id: format!("d{id:03}"),
        collection: collection.to_owned(),
        outlet: "Wire".into(),
        viewpoints,
        date: None,
        headline: format!("Report {id}"),
        body: sentences.join(" "),
    }
}

/// Small graph: at most 10 events, 8 entities, 30 documents.
pub fn random_workspace(rng: &mut StdRng) -> RandomWorkspace {
    let mut recs = vec![
        json!({"record": "type", "id": "conflict"}),
        json!({"record": "type", "id": "war"}),
        json!({"record": "type", "id": "battle"}),
        json!({"record": "type", "id": "riot"}),
        json!({"record": "supertype", "child": "war", "parent": "conflict"}),
        json!({"record": "supertype", "child": "battle", "parent": "conflict"}),
        json!({"record": "role", "id": "winner"}),
        json!({"record": "role", "id": "loser"}),
        json!({"record": "role", "id": "instigator"}),
        json!({"record": "role_schema", "type": "conflict", "roles": ["winner", "loser"]}),
        json!({"record": "role_schema", "type": "war", "roles": ["winner", "loser"]}),
        json!({"record": "role_schema", "type": "battle", "roles": ["winner", "loser"]}),
        json!({"record": "role_schema", "type": "riot", "roles": ["instigator"]}),
        json!({"record": "location", "id": "somewhere", "name": "Somewhere"}),
        json!({"record": "attribution", "name": "is_underdog", "kind": "entity-in-event", "subjectivity": "objective"}),
        json!({"record": "attribution", "name": "cold", "kind": "event", "subjectivity": "objective"}),
        json!({"record": "attribution", "name": "is_aggressor", "kind": "entity-in-event", "subjectivity": "subjective"}),
        json!({"record": "attribution", "name": "is_enemy", "kind": "entity-in-event", "subjectivity": "subjective"}),
        json!({"record": "attribution", "name": "was_illegal", "kind": "event", "subjectivity": "subjective"}),
    ];
    for v in VIEWPOINTS {
        recs.push(json!({"record": "viewpoint", "id": v, "name": v}));
    }
    let mut pool: Vec<_> = ENTITY_POOL.to_vec();
    pool.shuffle(rng);
    let n_entities = rng.gen_range(2..=8);
    let entities: Vec<&'static str> = pool[..n_entities].iter().map(|e| e.0).collect();
    for (id, name, aliases) in &pool[..n_entities] {
        recs.push(json!({"record": "entity", "id": id, "name": name, "aliases": aliases,
            "attributes": [{"name": "nuclear", "value": rng.gen_bool(0.5)}]}));
    }
    let mut events = Vec::new();
    let mut collections = Vec::new();
    for i in 0..rng.gen_range(0..=10) {
        let label = format!("E{i}");
        let ty = ["conflict", "war", "battle", "riot"].choose(rng).unwrap();
        let mut ps = entities.clone();
        ps.shuffle(rng);
        ps.truncate(rng.gen_range(0..=ps.len().min(4)));
        let mut roles = Vec::new();
        for p in &ps {
            if rng.gen_bool(0.6) {
                let r = if *ty == "riot" { "instigator" } else { *["winner", "loser"].choose(rng).unwrap() };
                roles.push(json!({"entity": p, "role": r}));
            }
        }
        let year = rng.gen_range(1950..2020);
        recs.push(json!({"record": "event", "label": label, "time": {"start": format!("{year}-01-01"), "end": format!("{year}-12-31")},
            "location": "somewhere", "types": [ty], "participants": ps, "roles": roles}));
        for p in &ps {
            if rng.gen_bool(0.3) {
                recs.push(json!({"record": "objective", "attribution": "is_underdog", "event": label, "entity": p}));
            }
        }
        if rng.gen_bool(0.3) {
            recs.push(json!({"record": "objective", "attribution": "cold", "event": label}));
        }
        if rng.gen_bool(0.75) {
            let c = format!("c{i}");
            recs.push(json!({"record": "collection_link", "event": label, "collection": c}));
            collections.push((label.clone(), c));
        }
        events.push(label);
    }
    let text: String = recs.iter().map(|r| r.to_string() + "\n").collect();
    let kg = ingest_kg_str(&text).expect("generated graph is valid");

    let mut docs = Vec::new();
    if !collections.is_empty() {
        for id in 0..rng.gen_range(0..=30) {
            let (event, c) = collections.choose(rng).unwrap().clone();
            let ps: Vec<&'static str> =
                entities.iter().copied().filter(|e| kg.participants(&event).is_ok_and(|p| p.contains(*e))).collect();
            let pool = if ps.is_empty() || rng.gen_bool(0.3) { &entities } else { &ps };
            docs.push(random_document(rng, id, pool, &c));
        }
    }
    let corpus = CorpusStore::from_documents(docs).expect("generated corpus is valid");

    let mut config = Config::default();
    config.assessment.confidence_threshold = *[0.5, 0.7, 0.85].choose(rng).unwrap();
    config.assessment.min_witnesses = rng.gen_range(1..=2);
    RandomWorkspace { kg, corpus, config, entities, events, collections }
}

fn viewpoint_clause(rng: &mut StdRng) -> Option<Vec<String>> {
    if rng.gen_bool(0.5) {
        return None;
    }
    let mut vs: Vec<String> = VIEWPOINTS.iter().filter(|_| rng.gen_bool(0.5)).map(|v| v.to_string()).collect();
    if vs.is_empty() {
        vs.push(VIEWPOINTS.choose(rng).unwrap().to_string());
    }
    Some(vs)
}

fn random_subject(rng: &mut StdRng, binds: &[String], entities: &[&str], allow_const: bool) -> Term {
    let roll = rng.gen_range(0..3);
    if roll == 0 && !binds.is_empty() {
        Term::Var(binds.choose(rng).unwrap().clone())
    } else if roll == 1 && allow_const {
        Term::Entity(entities.choose(rng).unwrap().to_string())
    } else {
        Term::Wildcard
    }
}

fn wrap(atom: RefinementAtom, subject: &Term) -> Expr {
    if *subject == Term::Wildcard {
        Expr::Atom(RefinementAtom::ExistsParticipant(Box::new(atom)))
    } else {
        Expr::Atom(atom)
    }
}

fn random_atom(rng: &mut StdRng, binds: &[String], ws: &RandomWorkspace) -> Expr {
    match rng.gen_range(0..9) {
        0 => {
            let s = random_subject(rng, binds, &ws.entities, false);
            let op = if rng.gen_bool(0.7) { Comparator::Eq } else { Comparator::Ne };
            let role = ["winner", "loser"].choose(rng).unwrap().to_string();
            wrap(RefinementAtom::RoleBinding { subject: s.clone(), op, role }, &s)
        }
        1 => {
            let s = random_subject(rng, binds, &ws.entities, true);
            wrap(
                RefinementAtom::Attribution { name: "is_underdog".into(), args: vec![s.clone()], viewpoints: None },
                &s,
            )
        }
        2 => Expr::Atom(RefinementAtom::Attribution { name: "cold".into(), args: vec![], viewpoints: None }),
        3 => {
            let s = random_subject(rng, binds, &ws.entities, false);
            let target = AttributeTarget::Entity { attribute: "nuclear".into(), subject: s.clone() };
            wrap(
                RefinementAtom::AttributeTest { target, op: Comparator::Eq, value: Literal::Bool(rng.gen_bool(0.5)) },
                &s,
            )
        }
        4 => Expr::Atom(RefinementAtom::AttributeTest {
            target: AttributeTarget::Event(EventFunction::ParticipantCount),
            op: Comparator::Ge,
            value: Literal::Int(rng.gen_range(0..4)),
        }),
        5 => Expr::Atom(RefinementAtom::Attribution {
            name: "was_illegal".into(),
            args: vec![],
            viewpoints: viewpoint_clause(rng),
        }),
        _ => {
            let s = random_subject(rng, binds, &ws.entities, true);
            let name = if rng.gen_bool(0.7) { "is_aggressor" } else { "is_enemy" };
            let atom = RefinementAtom::Attribution {
                name: name.into(),
                args: vec![s.clone()],
                viewpoints: viewpoint_clause(rng),
            };
            wrap(atom, &s)
        }
    }
}

fn random_expr(rng: &mut StdRng, binds: &[String], ws: &RandomWorkspace, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.35) {
        return random_atom(rng, binds, ws);
    }
    match rng.gen_range(0..5) {
        0 => Expr::not(random_expr(rng, binds, ws, depth - 1)),
        1 => Expr::or(random_expr(rng, binds, ws, depth - 1), random_expr(rng, binds, ws, depth - 1)),
        _ => Expr::and(random_expr(rng, binds, ws, depth - 1), random_expr(rng, binds, ws, depth - 1)),
    }
}

/// A prototype over `ws` that plans without errors.
pub fn random_prototype(rng: &mut StdRng, ws: &RandomWorkspace) -> String {
    let pattern = match rng.gen_range(0..4) {
        0 if !ws.events.is_empty() => EventPattern::ByEvent(ws.events.choose(rng).unwrap().clone()),
        1 => EventPattern::ByType(["war", "riot", "conflict"].choose(rng).unwrap().to_string()),
        _ => EventPattern::BySupertype("conflict".into()),
    };
    let binds: Vec<String> = ["x", "y"].iter().take(rng.gen_range(0..=2)).map(|s| s.to_string()).collect();
    let refinement = random_expr(rng, &binds, ws, 3);
    PrototypeAst { pattern, binds, refinement }.to_string()
}

pub fn labels(r: &QueryResult) -> BTreeSet<String> {
    r.matched_events().into_iter().map(str::to_owned).collect()
}

// ---- AST strategies for the round-trip property ----

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}".prop_filter("not reserved", |s| {
        !["true", "false"].contains(&s.as_str()) && EventFunction::from_name(s).is_none() && s != "role"
    })
}

fn upper_ident() -> impl Strategy<Value = String> {
    "[A-Z][A-Za-z0-9]{0,6}".prop_filter("not a keyword", |s| {
        !["MATCH", "EVENT", "TYPE", "SUPERTYPE", "BIND", "WHERE", "AND", "OR", "NOT", "FROM"].contains(&s.as_str())
    })
}

fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z ]{0,10}",
        Just("quote \" and \\ slash".to_string()),
        Just("tab\tnew\nline".to_string()),
        Just("Tecumseh's Confederacy".to_string()),
    ]
}

fn comparator() -> impl Strategy<Value = Comparator> {
    prop_oneof![
        Just(Comparator::Eq),
        Just(Comparator::Ne),
        Just(Comparator::Lt),
        Just(Comparator::Le),
        Just(Comparator::Gt),
        Just(Comparator::Ge),
    ]
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        text().prop_map(Literal::Str),
        any::<i32>().prop_map(|i| Literal::Int(i64::from(i))),
        any::<bool>().prop_map(Literal::Bool),
        ident().prop_map(Literal::Ident),
    ]
}

fn term(binds: Vec<String>) -> BoxedStrategy<Term> {
    if binds.is_empty() {
        text().prop_map(Term::Entity).boxed()
    } else {
        prop_oneof![proptest::sample::select(binds).prop_map(Term::Var), text().prop_map(Term::Entity)].boxed()
    }
}

fn plain_atom(binds: Vec<String>) -> BoxedStrategy<RefinementAtom> {
    let b = binds.clone();
    let b2 = binds.clone();
    prop_oneof![
        (
            ident(),
            proptest::collection::vec(term(binds.clone()), 0..3),
            proptest::option::of(proptest::collection::btree_set(upper_ident(), 1..3))
        )
            .prop_map(|(name, args, vs)| RefinementAtom::Attribution {
                name,
                args,
                viewpoints: vs.map(|s| s.into_iter().collect()),
            }),
        (term(b), prop_oneof![Just(Comparator::Eq), Just(Comparator::Ne)], prop_oneof![ident(), text()])
            .prop_map(|(subject, op, role)| RefinementAtom::RoleBinding { subject, op, role }),
        (ident(), term(b2), comparator(), literal()).prop_map(|(attribute, subject, op, value)| {
            RefinementAtom::AttributeTest { target: AttributeTarget::Entity { attribute, subject }, op, value }
        }),
        (proptest::sample::select(EventFunction::ALL.to_vec()), comparator(), literal())
            .prop_map(|(f, op, value)| RefinementAtom::AttributeTest { target: AttributeTarget::Event(f), op, value }),
    ]
    .boxed()
}

/// Replaces the first argument-like term with `_`, if the atom has one.
fn existential(atom: RefinementAtom) -> RefinementAtom {
    match atom {
        RefinementAtom::Attribution { name, mut args, viewpoints } if !args.is_empty() => {
            args[0] = Term::Wildcard;
            RefinementAtom::ExistsParticipant(Box::new(RefinementAtom::Attribution { name, args, viewpoints }))
        }
        RefinementAtom::RoleBinding { op, role, .. } => {
            RefinementAtom::ExistsParticipant(Box::new(RefinementAtom::RoleBinding {
                subject: Term::Wildcard,
                op,
                role,
            }))
        }
        other => other,
    }
}

fn atom(binds: Vec<String>) -> BoxedStrategy<RefinementAtom> {
    (plain_atom(binds), any::<bool>()).prop_map(|(a, ex)| if ex { existential(a) } else { a }).boxed()
}

fn expr(binds: Vec<String>) -> impl Strategy<Value = Expr> {
    atom(binds).prop_map(Expr::Atom).prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::and(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Expr::or(l, r)),
        ]
    })
}

pub fn arb_prototype() -> impl Strategy<Value = PrototypeAst> {
    let pattern = prop_oneof![
        ident().prop_map(EventPattern::ByEvent),
        ident().prop_map(EventPattern::ByType),
        upper_ident().prop_map(EventPattern::BySupertype),
    ];
    (pattern, proptest::collection::btree_set(ident(), 0..3)).prop_flat_map(|(pattern, binds)| {
        let binds: Vec<String> = binds.into_iter().collect();
        expr(binds.clone()).prop_map(move |refinement| PrototypeAst {
            pattern: pattern.clone(),
            binds: binds.clone(),
            refinement,
        })
    })
}

// ---- shared property cases ----

pub struct DifferentialOutcome {
    pub matched: bool,
    pub pruned: bool,
}

/// One random workspace and prototype; `Err` describes a divergence between modes.
pub fn differential_case(case: u64) -> Result<DifferentialOutcome, String> {
    let mut rng = StdRng::seed_from_u64(0xd1ff_0000 + case);
    let mut ws = random_workspace(&mut rng);
    ws.config.engine.parallelism = rng.gen_range(1..=3);
    let assessor = ws.assessor();
    let index = build_index_from_corpus(&ws.kg, &ws.corpus, &assessor, &ws.config).map_err(|e| e.to_string())?;
    let plain = ws.engine(&assessor);
    let indexed = Engine::new(&ws.kg, &ws.corpus, &assessor, &ws.config).with_index(Some(&index));
    let q = random_prototype(&mut rng, &ws);
    let fail = |what: String| format!("case {case}: {q}: {what}");
    let plan = plain.plan(&q).map_err(|e| fail(e.to_string()))?;
    let reference = plain.execute_reference(&plan).map_err(|e| fail(e.to_string()))?;
    let full = plain.execute(&plan).map_err(|e| fail(e.to_string()))?;
    let fast = indexed.execute(&indexed.plan(&q).unwrap()).map_err(|e| fail(e.to_string()))?;
    if fast.warnings.iter().any(|w| w.contains("index")) {
        return Err(fail(format!("index ignored: {:?}", fast.warnings)));
    }
    if labels(&reference) != labels(&fast) || labels(&reference) != labels(&full) {
        return Err(fail(format!("ref {:?} full {:?} indexed {:?}", labels(&reference), labels(&full), labels(&fast))));
    }
    let binds = |r: &QueryResult| r.matches.iter().map(|m| m.bindings.clone()).collect::<Vec<_>>();
    if binds(&reference) != binds(&fast) {
        return Err(fail(format!("bindings differ: {:?} vs {:?}", binds(&reference), binds(&fast))));
    }
    if fast.counters.documents_assessed > full.counters.documents_assessed {
        return Err(fail("index increased the number of assessments".into()));
    }
    Ok(DifferentialOutcome { matched: !fast.matches.is_empty(), pruned: fast.counters.index_prunes > 0 })
}

fn monotone_query(rng: &mut StdRng, ws: &RandomWorkspace) -> (String, &'static str, Option<&'static str>) {
    let from = if rng.gen_bool(0.5) { String::new() } else { format!(" FROM {{{}}}", VIEWPOINTS.choose(rng).unwrap()) };
    let e = *ws.entities.choose(rng).unwrap();
    match rng.gen_range(0..4) {
        0 => (format!("MATCH SUPERTYPE conflict BIND x WHERE is_aggressor(x){from}"), "is_aggressor", None),
        1 => (format!("MATCH SUPERTYPE conflict WHERE is_enemy(_){from}"), "is_enemy", None),
        2 => (format!("MATCH SUPERTYPE conflict WHERE was_illegal(){from}"), "was_illegal", None),
        _ => (
            format!("MATCH SUPERTYPE conflict WHERE is_aggressor(\"{e}\"){from} AND participant_count() >= 0"),
            "is_aggressor",
            Some(e),
        ),
    }
}

/// Adds one positive document (three signal sentences, confidence 0.9) to a random corpus and reports whether the match set grew.
/// `Ok(None)` when the workspace had no collection to add to.
pub fn monotonicity_case(seed: u64) -> Result<Option<bool>, String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let ws = random_workspace(&mut rng);
    if ws.collections.is_empty() {
        return Ok(None);
    }
    let (q, attribution, target) = monotone_query(&mut rng, &ws);
    let assessor = ws.assessor();
    let before = labels(&ws.engine(&assessor).query(&q).map_err(|e| e.to_string())?);

    let (event, collection) = ws.collections.choose(&mut rng).unwrap().clone();
    let participants: Vec<&'static str> =
        ws.entities.iter().copied().filter(|e| ws.kg.participants(&event).is_ok_and(|ps| ps.contains(*e))).collect();
    let pool = if participants.is_empty() || rng.gen_bool(0.2) { &ws.entities } else { &participants };
    let subject = target.unwrap_or_else(|| pool.choose(&mut rng).unwrap());
    let mut doc = random_document(&mut rng, 900, &ws.entities, &collection);
    doc.body = (0..3).map(|_| statement(&mut rng, attribution, subject, false)).collect::<Vec<_>>().join(" ");
    let mut docs: Vec<_> = ws.corpus.documents().cloned().collect();
    docs.push(doc);
    let grown = RandomWorkspace { corpus: CorpusStore::from_documents(docs).map_err(|e| e.to_string())?, ..ws };
    let after = labels(&grown.engine(&assessor).query(&q).map_err(|e| e.to_string())?);
    if before.is_subset(&after) {
        Ok(Some(after.len() > before.len()))
    } else {
        Err(format!("seed {seed}: {q}: before {before:?} after {after:?}"))
    }
}
