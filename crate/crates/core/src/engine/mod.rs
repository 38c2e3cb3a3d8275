//! Staged evaluation of narrative prototypes.
//!
//! 1. candidate events from the pattern, then objective atoms against the
//!    graph, with subjective atoms still unknown (three-valued logic);
//! 2. index pruning: subjective atoms the index rules out become false;
//! 3. document assessment for whatever is still undecided, cheapest first,
//!    stopping as soon as the refinement is decided.
//!
//! [`Engine::execute_reference`] evaluates the same semantics by brute force
//! and exists as a differential-testing oracle.

mod plan;
mod scan;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use chrono::Datelike;
use serde::Serialize;
use thiserror::Error;

use crate::config::{Config, ErrorPolicy};
use crate::corpus::{CorpusStore, Document};
use crate::dsl::{parse, Comparator, EventFunction, ParseError};
use crate::graph::{KgError, KnowledgeGraph};
use crate::index::{AttributionIndexSet, Positive};
use crate::model::{AttributionKind, Event};
use crate::witness::{
    evaluate_witnesses, finish, is_witness, verdict, AssessError, AssessmentResult, Assessor, Candidate,
    ConfidenceScorer, ThresholdPolicy, WitnessOutcome, WitnessQuery, WitnessScorer, WitnessVerdict,
};

pub use plan::{
    plan, CandidateSource, Check, EventValue, ObjectiveCheck, PlanError, PlanExpr, PlannedAtom, QueryPlan, Subject,
    SubjectiveCheck, ViewpointScope,
};
pub use scan::{build_index_from_corpus, index_from_positives, scan_positives, ScanBuildError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Plan(#[from] PlanError),
    #[error("assessing document `{doc_id}`: {source}")]
    Assessor { doc_id: String, source: AssessError },
    #[error(transparent)]
    Graph(#[from] KgError),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    /// Events matched by the pattern.
    pub pattern_candidates: usize,
    /// Events left after objective atoms.
    pub after_objective: usize,
    /// Events left after index pruning.
    pub after_index: usize,
    pub matched: usize,
    /// Subjective checks (participant, or participant and viewpoint) ruled out by the index.
    pub index_prunes: usize,
    /// Assessor calls.
    pub documents_assessed: usize,
    pub cache_hits: usize,
    pub assessment_errors: usize,
}

impl Counters {
    fn absorb(&mut self, other: &Counters) {
        self.index_prunes += other.index_prunes;
        self.documents_assessed += other.documents_assessed;
        self.cache_hits += other.cache_hits;
        self.assessment_errors += other.assessment_errors;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub pattern_objective_ms: f64,
    pub index_ms: f64,
    pub documents_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomEvidence {
    pub atom: String,
    pub participant: Option<String>,
    pub viewpoint: String,
    pub holds: bool,
    pub witness_count: usize,
    pub witnesses: Vec<WitnessVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventMatch {
    pub event: String,
    /// Participant chosen for each bound variable.
    pub bindings: BTreeMap<String, String>,
    /// Objective atoms that hold under the bindings, with variables substituted.
    pub justification: Vec<String>,
    pub evidence: Vec<AtomEvidence>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct QueryResult {
    pub query: String,
    pub matches: Vec<EventMatch>,
    pub counters: Counters,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
    /// Witness-grade assessments seen while evaluating, for the evaluation log.
    #[serde(skip)]
    pub positives: BTreeSet<Positive>,
}

impl QueryResult {
    pub fn matched_events(&self) -> BTreeSet<&str> {
        self.matches.iter().map(|m| m.event.as_str()).collect()
    }
}

/// Records what an assessment contributes to the index, using the witness test itself.
#[allow(clippy::too_many_arguments)]
pub(crate) fn record_positives(
    out: &mut BTreeSet<Positive>,
    kind: AttributionKind,
    attribution: &str,
    event: &str,
    doc: &Document,
    result: &AssessmentResult,
    confidence: f64,
    viewpoints: &dyn Fn(&str) -> bool,
) {
    if result.confidence < confidence {
        return;
    }
    let key = match kind {
        AttributionKind::Event => event,
        _ => match result.canonical_target.as_deref() {
            Some(t) => t,
            None => return,
        },
    };
    for v in doc.viewpoints.iter().filter(|v| viewpoints(v)) {
        out.insert(Positive::new(attribution, v.as_str(), key));
    }
}

/// Participants of `ev`, plus an entity constant named by the atom, with their aliases.
pub(crate) fn candidates_for(kg: &KnowledgeGraph, ev: &Event, constant: Option<&str>) -> Vec<Candidate> {
    let mut ids: BTreeSet<&str> = ev.participants().iter().map(String::as_str).collect();
    if let Some(c) = constant {
        ids.insert(c);
    }
    ids.into_iter()
        .map(|id| {
            let mut aliases: Vec<String> =
                kg.entity(id).map(|e| e.aliases().iter().cloned().collect()).unwrap_or_default();
            if !aliases.iter().any(|a| a == id) {
                aliases.insert(0, id.to_owned());
            }
            Candidate { id: id.to_owned(), aliases }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tv {
    False,
    Unknown,
    True,
}

impl Tv {
    fn of(b: bool) -> Tv {
        if b {
            Tv::True
        } else {
            Tv::False
        }
    }

    fn not(self) -> Tv {
        match self {
            Tv::False => Tv::True,
            Tv::True => Tv::False,
            Tv::Unknown => Tv::Unknown,
        }
    }
}

enum Resolved<'s> {
    One(&'s str),
    Any,
    Event,
}

fn resolve<'s>(s: Option<&'s Subject>, assignment: &[&'s str]) -> Resolved<'s> {
    match s {
        None => Resolved::Event,
        Some(Subject::Var(i)) => Resolved::One(assignment[*i]),
        Some(Subject::Entity(e)) => Resolved::One(e),
        Some(Subject::Any) => Resolved::Any,
    }
}

fn assignments<'e>(participants: &[&'e str], arity: usize) -> Vec<Vec<&'e str>> {
    let mut out: Vec<Vec<&'e str>> = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                participants.iter().map(move |p| {
                    let mut next = prefix.clone();
                    next.push(*p);
                    next
                })
            })
            .collect();
    }
    out
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

pub struct Engine<'a> {
    kg: &'a KnowledgeGraph,
    corpus: &'a CorpusStore,
    assessor: &'a dyn Assessor,
    config: &'a Config,
    index: Option<&'a AttributionIndexSet>,
    scorer: &'a dyn WitnessScorer,
    policy: ThresholdPolicy,
    warnings: Vec<String>,
}

impl<'a> Engine<'a> {
    pub fn new(
        kg: &'a KnowledgeGraph,
        corpus: &'a CorpusStore,
        assessor: &'a dyn Assessor,
        config: &'a Config,
    ) -> Self {
        Engine {
            kg,
            corpus,
            assessor,
            config,
            index: None,
            scorer: &ConfidenceScorer,
            policy: config.threshold_policy(),
            warnings: Vec::new(),
        }
    }

    /// Enables pruning. An index built under different assessment settings is
    /// ignored with a warning, since its negatives would no longer be sound.
    pub fn with_index(mut self, index: Option<&'a AttributionIndexSet>) -> Self {
        self.index = None;
        if let Some(idx) = index {
            if idx.fingerprint() == self.config.assessment_fingerprint() {
                self.index = Some(idx);
            } else {
                self.warnings.push("index was built under different assessment settings; ignoring it".into());
            }
        }
        self
    }

    pub fn with_scorer(mut self, scorer: &'a dyn WitnessScorer) -> Self {
        self.scorer = scorer;
        self
    }

    pub fn index(&self) -> Option<&AttributionIndexSet> {
        self.index
    }

    pub fn plan(&self, text: &str) -> Result<QueryPlan, EngineError> {
        let ast = parse(text)?;
        Ok(plan(&ast, self.kg, self.config, self.index)?)
    }

    pub fn query(&self, text: &str) -> Result<QueryResult, EngineError> {
        let p = self.plan(text)?;
        self.execute(&p)
    }

    fn candidates(&self, plan: &QueryPlan) -> Result<Vec<&'a Event>, KgError> {
        let mut events = match &plan.source {
            CandidateSource::Event(label) => vec![self.kg.event(label)?],
            CandidateSource::Type { ty, include_subtypes } => self.kg.events_matching_type(ty, *include_subtypes)?,
        };
        events.sort_by(|a, b| a.label().cmp(b.label()));
        Ok(events)
    }

    fn objective(&self, check: &ObjectiveCheck, ev: &Event, assignment: &[&str]) -> Result<bool, KgError> {
        let subject = match check {
            ObjectiveCheck::Attribution { subject, .. } => subject.as_ref(),
            ObjectiveCheck::Role { subject, .. }
            | ObjectiveCheck::EntityName { subject, .. }
            | ObjectiveCheck::EntityAttribute { subject, .. } => Some(subject),
            ObjectiveCheck::Event { .. } => None,
        };
        match resolve(subject, assignment) {
            Resolved::Event => self.objective_for(check, ev, None),
            Resolved::One(x) => self.objective_for(check, ev, Some(x)),
            Resolved::Any => {
                for p in ev.participants() {
                    if self.objective_for(check, ev, Some(p))? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    fn objective_for(&self, check: &ObjectiveCheck, ev: &Event, x: Option<&str>) -> Result<bool, KgError> {
        let label = ev.label();
        let x = || x.expect("entity subject");
        Ok(match check {
            ObjectiveCheck::Attribution { name, kind, .. } => {
                let arg = if *kind == AttributionKind::Event { None } else { Some(x()) };
                self.kg.check_objective(name, label, arg)?
            }
            ObjectiveCheck::Role { negated, role, .. } => self.kg.role_equals(role, x(), label)? != *negated,
            ObjectiveCheck::EntityName { op, value, .. } => op.holds(self.kg.entity(x())?.name().cmp(value.as_str())),
            ObjectiveCheck::EntityAttribute { attribute, op, value, .. } => {
                match self.kg.attribute_at(x(), attribute, ev.time())? {
                    Some(v) if std::mem::discriminant(v) == std::mem::discriminant(value) => op.holds(v.cmp(value)),
                    _ => false,
                }
            }
            ObjectiveCheck::Event { function, op, value } => self.event_test(ev, *function, *op, value)?,
        })
    }

    fn event_test(&self, ev: &Event, f: EventFunction, op: Comparator, value: &EventValue) -> Result<bool, KgError> {
        let eq = |b: bool| if op == Comparator::Ne { !b } else { b };
        Ok(match (f, value) {
            (EventFunction::ParticipantCount, EventValue::Count(n)) => {
                op.holds((ev.participants().len() as i64).cmp(n))
            }
            (EventFunction::StartDate, EventValue::Date(d)) => op.holds(ev.time().start().cmp(d)),
            (EventFunction::EndDate, EventValue::Date(d)) => op.holds(ev.time().end().cmp(d)),
            (EventFunction::StartDate, EventValue::Year(y)) => op.holds(ev.time().start().year().cmp(y)),
            (EventFunction::EndDate, EventValue::Year(y)) => op.holds(ev.time().end().year().cmp(y)),
            (EventFunction::EventType, EventValue::Name(t)) => {
                let accepted = self.kg.taxonomy().descendants(t);
                eq(ev.types().iter().any(|ty| accepted.contains(ty)))
            }
            (EventFunction::Location, EventValue::Name(l)) => eq(self.kg.location_within(ev.label(), l)?),
            _ => false,
        })
    }

    fn docs_for(&self, collection: Option<&str>, viewpoints: &BTreeSet<String>) -> Vec<&'a Document> {
        let corpus: &'a CorpusStore = self.corpus;
        collection.and_then(|c| corpus.documents_for(c, Some(viewpoints)).ok()).unwrap_or_default()
    }

    fn event_candidates(&self, ev: &Event, constant: Option<&str>) -> Vec<Candidate> {
        candidates_for(self.kg, ev, constant)
    }

    fn known_viewpoint(&self) -> impl Fn(&str) -> bool + '_ {
        move |v| self.kg.has_viewpoint(v)
    }

    pub fn execute(&self, plan: &QueryPlan) -> Result<QueryResult, EngineError> {
        let start = Instant::now();
        let mut result =
            QueryResult { query: plan.text.clone(), warnings: self.warnings.clone(), ..Default::default() };
        let events = self.candidates(plan)?;
        result.counters.pattern_candidates = events.len();

        let mut runs = Vec::new();
        for ev in events {
            let mut run = EventRun::new(self, plan, ev);
            if plan.subjective_count() > 0 {
                match run.collection {
                    None => result.warnings.push(format!("event `{}` has no document collection", ev.label())),
                    Some(c) if self.corpus.collection(c).is_none() => {
                        result.warnings.push(format!("collection `{c}` of event `{}` has no documents", ev.label()))
                    }
                    _ => {}
                }
            }
            run.retain_possible()?;
            if !run.assignments.is_empty() {
                runs.push(run);
            }
        }
        result.counters.after_objective = runs.len();
        result.timings.pattern_objective_ms = ms(start);

        let t = Instant::now();
        if let Some(index) = self.index {
            for run in &mut runs {
                run.apply_index(index);
                result.counters.index_prunes += std::mem::take(&mut run.counters.index_prunes);
                run.retain_possible()?;
            }
            runs.retain(|r| !r.assignments.is_empty());
        }
        result.counters.after_index = runs.len();
        result.timings.index_ms = ms(t);

        let t = Instant::now();
        let outcomes = self.run_parallel(runs);
        result.timings.documents_ms = ms(t);
        for outcome in outcomes {
            let (m, counters, positives) = outcome?;
            result.counters.absorb(&counters);
            result.positives.extend(positives);
            if let Some(m) = m {
                result.matches.push(m);
            }
        }
        result.counters.matched = result.matches.len();
        result.timings.total_ms = ms(start);
        Ok(result)
    }

    #[allow(clippy::type_complexity)]
    fn run_parallel<'r>(
        &'r self,
        runs: Vec<EventRun<'r, 'a>>,
    ) -> Vec<Result<(Option<EventMatch>, Counters, BTreeSet<Positive>), EngineError>> {
        let width = self.config.engine.parallelism.max(1).min(runs.len().max(1));
        if width <= 1 {
            return runs.into_iter().map(EventRun::finish).collect();
        }
        let mut slots: Vec<Option<EventRun<'r, 'a>>> = runs.into_iter().map(Some).collect();
        let n = slots.len();
        let mut results: Vec<Option<_>> = (0..n).map(|_| None).collect();
        std::thread::scope(|s| {
            let mut handles = Vec::new();
            let mut buckets: Vec<Vec<(usize, EventRun<'r, 'a>)>> = (0..width).map(|_| Vec::new()).collect();
            for (i, slot) in slots.iter_mut().enumerate() {
                buckets[i % width].push((i, slot.take().expect("each run taken once")));
            }
            for bucket in buckets {
                handles.push(s.spawn(move || bucket.into_iter().map(|(i, r)| (i, r.finish())).collect::<Vec<_>>()));
            }
            for h in handles {
                for (i, r) in h.join().expect("event worker panicked") {
                    results[i] = Some(r);
                }
            }
        });
        results.into_iter().map(|r| r.expect("every event evaluated")).collect()
    }

    /// Brute-force evaluation of the same semantics: no index, no cache, no
    /// early termination, documents assessed one by one in order.
    pub fn execute_reference(&self, plan: &QueryPlan) -> Result<QueryResult, EngineError> {
        let start = Instant::now();
        let mut result = QueryResult { query: plan.text.clone(), ..Default::default() };
        let events = self.candidates(plan)?;
        result.counters.pattern_candidates = events.len();
        for ev in events {
            let participants: Vec<&str> = ev.participants().iter().map(String::as_str).collect();
            let mut first: Option<Vec<&str>> = None;
            for a in assignments(&participants, plan.binds.len()) {
                let v = self.strict(plan, &plan.refinement, ev, &a, &mut result.counters)?;
                if v && first.is_none() {
                    first = Some(a);
                }
            }
            if let Some(a) = first {
                result.matches.push(EventMatch {
                    event: ev.label().to_owned(),
                    bindings: plan.binds.iter().cloned().zip(a.iter().map(|s| s.to_string())).collect(),
                    justification: Vec::new(),
                    evidence: Vec::new(),
                });
            }
        }
        result.counters.matched = result.matches.len();
        result.timings.total_ms = ms(start);
        Ok(result)
    }

    fn strict(
        &self,
        plan: &QueryPlan,
        e: &PlanExpr,
        ev: &Event,
        a: &[&str],
        c: &mut Counters,
    ) -> Result<bool, EngineError> {
        Ok(match e {
            PlanExpr::Atom(id) => match &plan.atoms[*id].check {
                Check::Objective(o) => self.objective(o, ev, a)?,
                Check::Subjective(s) => match resolve(s.subject.as_ref(), a) {
                    Resolved::One(x) => self.strict_subjective(s, ev, Some(x), c)?,
                    Resolved::Event => self.strict_subjective(s, ev, None, c)?,
                    Resolved::Any => {
                        let mut any = false;
                        for p in ev.participants() {
                            any |= self.strict_subjective(s, ev, Some(p), c)?;
                        }
                        any
                    }
                },
            },
            PlanExpr::Not(x) => !self.strict(plan, x, ev, a, c)?,
            PlanExpr::And(xs) => {
                let mut all = true;
                for x in xs {
                    all &= self.strict(plan, x, ev, a, c)?;
                }
                all
            }
            PlanExpr::Or(xs) => {
                let mut any = false;
                for x in xs {
                    any |= self.strict(plan, x, ev, a, c)?;
                }
                any
            }
        })
    }

    fn strict_subjective(
        &self,
        s: &SubjectiveCheck,
        ev: &Event,
        x: Option<&str>,
        c: &mut Counters,
    ) -> Result<bool, EngineError> {
        let collection = self.kg.collection_of(ev.label())?;
        let candidates = self.event_candidates(ev, s.constant());
        let question = s.template.instantiate(ev.label());
        let required = if s.kind == AttributionKind::Event { None } else { x };
        let query =
            WitnessQuery::new(&s.attribution, &question, &candidates, required).expect("subject is a candidate");
        let mut per_viewpoint = Vec::new();
        for v in s.scope.viewpoints() {
            let docs = self.docs_for(collection, &BTreeSet::from([v.clone()]));
            let out = evaluate_witnesses(
                &docs,
                &query,
                self.assessor,
                &self.policy,
                self.config.assessment.error_policy,
                self.scorer,
            )
            .map_err(|source| EngineError::Assessor { doc_id: String::new(), source })?;
            c.documents_assessed += out.assessed;
            c.assessment_errors += out.skipped_errors;
            per_viewpoint.push(out.holds);
        }
        Ok(match s.scope {
            ViewpointScope::EachOf(_) => per_viewpoint.iter().all(|h| *h),
            ViewpointScope::AnyOf(_) => per_viewpoint.iter().any(|h| *h),
        })
    }
}

type CacheKey = (String, usize, Option<String>);

/// Evaluation state of one candidate event.
struct EventRun<'r, 'a> {
    engine: &'r Engine<'a>,
    plan: &'r QueryPlan,
    event: &'a Event,
    participants: Vec<&'a str>,
    collection: Option<&'a str>,
    assignments: Vec<Vec<&'a str>>,
    /// Decided subjective values, keyed by atom id and participant (event label for event attributions).
    decided: HashMap<(usize, String), bool>,
    cache: HashMap<CacheKey, Option<AssessmentResult>>,
    doc_estimate: HashMap<usize, usize>,
    counters: Counters,
    evidence: Vec<AtomEvidence>,
    positives: BTreeSet<Positive>,
}

impl<'r, 'a> EventRun<'r, 'a> {
    fn new(engine: &'r Engine<'a>, plan: &'r QueryPlan, event: &'a Event) -> Self {
        let participants: Vec<&'a str> = event.participants().iter().map(String::as_str).collect();
        let collection = engine.kg.collection_of(event.label()).ok().flatten();
        let assignments = assignments(&participants, plan.binds.len());
        EventRun {
            engine,
            plan,
            event,
            participants,
            collection,
            assignments,
            decided: HashMap::new(),
            cache: HashMap::new(),
            doc_estimate: HashMap::new(),
            counters: Counters::default(),
            evidence: Vec::new(),
            positives: BTreeSet::new(),
        }
    }

    fn keys(&self, s: &SubjectiveCheck, a: &[&str]) -> Vec<String> {
        match resolve(s.subject.as_ref(), a) {
            Resolved::One(x) => vec![x.to_owned()],
            Resolved::Event => vec![self.event.label().to_owned()],
            Resolved::Any => self.participants.iter().map(|p| p.to_string()).collect(),
        }
    }

    fn peek_subjective(&self, id: usize, s: &SubjectiveCheck, a: &[&str]) -> Tv {
        if self.collection.is_none() {
            return Tv::False;
        }
        let any = matches!(s.subject, Some(Subject::Any));
        let mut acc = Tv::False;
        for k in self.keys(s, a) {
            let v = self.decided.get(&(id, k)).map_or(Tv::Unknown, |b| Tv::of(*b));
            if !any {
                return v;
            }
            acc = or(acc, v);
        }
        acc
    }

    fn peek(&self, e: &PlanExpr, a: &[&str]) -> Result<Tv, KgError> {
        Ok(match e {
            PlanExpr::Atom(id) => match &self.plan.atoms[*id].check {
                Check::Objective(o) => Tv::of(self.engine.objective(o, self.event, a)?),
                Check::Subjective(s) => self.peek_subjective(*id, s, a),
            },
            PlanExpr::Not(x) => self.peek(x, a)?.not(),
            PlanExpr::And(xs) => {
                let mut acc = Tv::True;
                for x in xs {
                    acc = and(acc, self.peek(x, a)?);
                    if acc == Tv::False {
                        break;
                    }
                }
                acc
            }
            PlanExpr::Or(xs) => {
                let mut acc = Tv::False;
                for x in xs {
                    acc = or(acc, self.peek(x, a)?);
                    if acc == Tv::True {
                        break;
                    }
                }
                acc
            }
        })
    }

    fn retain_possible(&mut self) -> Result<(), KgError> {
        let mut keep = Vec::new();
        for a in std::mem::take(&mut self.assignments) {
            if self.peek(&self.plan.refinement, &a)? != Tv::False {
                keep.push(a);
            }
        }
        self.assignments = keep;
        Ok(())
    }

    fn apply_index(&mut self, index: &AttributionIndexSet) {
        for &id in &self.plan.subjective_order {
            let s = self.plan.subjective(id).expect("subjective id");
            if !index.covers(&s.attribution) {
                continue;
            }
            let keys: BTreeSet<String> = self.assignments.iter().flat_map(|a| self.keys(s, a)).collect();
            for k in keys {
                if self.decided.contains_key(&(id, k.clone())) {
                    continue;
                }
                let vs = s.scope.viewpoints();
                let pruned = match &s.scope {
                    ViewpointScope::EachOf(_) => vs.iter().any(|v| !index.may_hold(&s.attribution, &k, Some(v))),
                    ViewpointScope::AnyOf(_) => {
                        !index.may_hold(&s.attribution, &k, None)
                            || vs.iter().all(|v| !index.may_hold(&s.attribution, &k, Some(v)))
                    }
                };
                if pruned {
                    self.counters.index_prunes += 1;
                    self.decided.insert((id, k), false);
                }
            }
        }
    }

    fn estimate(&mut self, id: usize) -> usize {
        if let Some(n) = self.doc_estimate.get(&id) {
            return *n;
        }
        let s = self.plan.subjective(id).expect("subjective id");
        let set: BTreeSet<String> = s.scope.viewpoints().iter().cloned().collect();
        let n = self.engine.docs_for(self.collection, &set).len();
        self.doc_estimate.insert(id, n);
        n
    }

    /// Remaining assessment cost of an undecided subexpression.
    fn cost(&mut self, e: &PlanExpr, a: &[&str]) -> usize {
        match e {
            PlanExpr::Atom(id) if self.plan.atoms[*id].is_subjective() => {
                let s = self.plan.subjective(*id).expect("subjective id");
                if self.peek_subjective(*id, s, a) == Tv::Unknown {
                    self.estimate(*id)
                } else {
                    0
                }
            }
            PlanExpr::Atom(_) => 0,
            PlanExpr::Not(x) => self.cost(x, a),
            PlanExpr::And(xs) | PlanExpr::Or(xs) => xs.iter().map(|x| self.cost(x, a)).sum(),
        }
    }

    fn force(&mut self, e: &PlanExpr, a: &[&str]) -> Result<bool, EngineError> {
        match e {
            PlanExpr::Atom(id) => self.force_atom(*id, a),
            PlanExpr::Not(x) => Ok(!self.force(x, a)?),
            PlanExpr::And(xs) | PlanExpr::Or(xs) => {
                let is_and = matches!(e, PlanExpr::And(_));
                let (stop, neutral) = if is_and { (Tv::False, Tv::True) } else { (Tv::True, Tv::False) };
                let mut order = Vec::with_capacity(xs.len());
                for (i, x) in xs.iter().enumerate() {
                    let tv = self.peek(x, a)?;
                    if tv == stop {
                        return Ok(!is_and);
                    }
                    if tv != neutral {
                        order.push((self.cost(x, a), i));
                    }
                }
                order.sort();
                for (_, i) in order {
                    if self.force(&xs[i], a)? != is_and {
                        return Ok(!is_and);
                    }
                }
                Ok(is_and)
            }
        }
    }

    fn force_atom(&mut self, id: usize, a: &[&str]) -> Result<bool, EngineError> {
        let plan = self.plan;
        let s = match &plan.atoms[id].check {
            Check::Objective(o) => return Ok(self.engine.objective(o, self.event, a)?),
            Check::Subjective(s) => s,
        };
        if self.collection.is_none() {
            return Ok(false);
        }
        let any = matches!(s.subject, Some(Subject::Any));
        for k in self.keys(s, a) {
            let v = match self.decided.get(&(id, k.clone())) {
                Some(v) => *v,
                None => {
                    let v = self.decide(id, s, &k)?;
                    self.decided.insert((id, k), v);
                    v
                }
            };
            if !any || v {
                return Ok(v);
            }
        }
        Ok(false)
    }

    fn decide(&mut self, id: usize, s: &SubjectiveCheck, key: &str) -> Result<bool, EngineError> {
        let index = self.engine.index.filter(|i| i.covers(&s.attribution));
        let mut vs: Vec<(usize, &String)> = s
            .scope
            .viewpoints()
            .iter()
            .map(|v| (self.engine.docs_for(self.collection, &BTreeSet::from([v.clone()])).len(), v))
            .collect();
        vs.sort();
        let each = matches!(s.scope, ViewpointScope::EachOf(_));
        for (_, v) in vs {
            if index.is_some_and(|idx| !idx.may_hold(&s.attribution, key, Some(v))) {
                self.counters.index_prunes += 1;
                if each {
                    return Ok(false);
                }
                continue;
            }
            let holds = self.viewpoint_holds(id, s, key, v)?;
            if holds != each {
                return Ok(holds);
            }
        }
        Ok(each)
    }

    fn viewpoint_holds(&mut self, id: usize, s: &SubjectiveCheck, key: &str, v: &str) -> Result<bool, EngineError> {
        let engine = self.engine;
        let docs = engine.docs_for(self.collection, &BTreeSet::from([v.to_owned()]));
        let candidates = engine.event_candidates(self.event, s.constant());
        let question = s.template.instantiate(self.event.label());
        let required = if s.kind == AttributionKind::Event { None } else { Some(key) };
        let query =
            WitnessQuery::new(&s.attribution, &question, &candidates, required).expect("subject is a candidate");
        let extra = s.constant().filter(|c| !self.participants.contains(c)).map(str::to_owned);
        let mut out = WitnessOutcome::default();
        for doc in docs {
            let cache_key = (doc.doc_id.clone(), id_of(&self.plan.atoms, &s.attribution, id), extra.clone());
            let result = match self.cache.get(&cache_key) {
                Some(r) => {
                    self.counters.cache_hits += 1;
                    r.clone()
                }
                None => {
                    self.counters.documents_assessed += 1;
                    let r = match engine.assessor.assess(&query.request(doc)) {
                        Ok(r) => {
                            let known = engine.known_viewpoint();
                            let thr = engine.policy.confidence;
                            record_positives(
                                &mut self.positives,
                                s.kind,
                                &s.attribution,
                                self.event.label(),
                                doc,
                                &r,
                                thr,
                                &known,
                            );
                            Some(r)
                        }
                        Err(e) if engine.config.assessment.error_policy == ErrorPolicy::FailQuery => {
                            return Err(EngineError::Assessor { doc_id: doc.doc_id.clone(), source: e });
                        }
                        Err(_) => {
                            self.counters.assessment_errors += 1;
                            None
                        }
                    };
                    self.cache.insert(cache_key, r.clone());
                    r
                }
            };
            if let Some(r) = result {
                if is_witness(&r, &engine.policy, required) {
                    out.witnesses.push(verdict(doc, &r, engine.scorer));
                    if out.witnesses.len() >= engine.policy.min_witnesses {
                        break;
                    }
                }
            }
        }
        let out = finish(out, &engine.policy);
        self.evidence.push(AtomEvidence {
            atom: self.plan.atoms[id].text.clone(),
            participant: required.map(str::to_owned),
            viewpoint: v.to_owned(),
            holds: out.holds,
            witness_count: out.witness_count,
            witnesses: out.witnesses,
        });
        Ok(out.holds)
    }

    fn finish(mut self) -> Result<(Option<EventMatch>, Counters, BTreeSet<Positive>), EngineError> {
        let mut found = None;
        for a in std::mem::take(&mut self.assignments) {
            if self.force(&self.plan.refinement, &a)? {
                found = Some(a);
                break;
            }
        }
        let m = match found {
            None => None,
            Some(a) => {
                let mut justification = Vec::new();
                for &id in &self.plan.objective_order {
                    let Check::Objective(o) = &self.plan.atoms[id].check else { continue };
                    if self.engine.objective(o, self.event, &a)? {
                        justification.push(substitute(&self.plan.atoms[id].text, &self.plan.binds, &a));
                    }
                }
                Some(EventMatch {
                    event: self.event.label().to_owned(),
                    bindings: self.plan.binds.iter().cloned().zip(a.iter().map(|s| s.to_string())).collect(),
                    justification,
                    evidence: self.evidence,
                })
            }
        };
        Ok((m, self.counters, self.positives))
    }
}

/// Atoms sharing an attribution and candidate set share cached assessments.
fn id_of(atoms: &[PlannedAtom], attribution: &str, fallback: usize) -> usize {
    atoms
        .iter()
        .find(|a| matches!(&a.check, Check::Subjective(s) if s.attribution == attribution))
        .map_or(fallback, |a| a.id)
}

fn substitute(text: &str, binds: &[String], a: &[&str]) -> String {
    let mut out = text.to_owned();
    for (b, v) in binds.iter().zip(a) {
        out = out.replace(&format!("({b})"), &format!("({v})"));
    }
    out
}

fn and(a: Tv, b: Tv) -> Tv {
    match (a, b) {
        (Tv::False, _) | (_, Tv::False) => Tv::False,
        (Tv::True, Tv::True) => Tv::True,
        _ => Tv::Unknown,
    }
}

fn or(a: Tv, b: Tv) -> Tv {
    and(a.not(), b.not()).not()
}

impl PartialOrd for AtomEvidence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.atom.cmp(&other.atom).then_with(|| self.viewpoint.cmp(&other.viewpoint)))
    }
}
