//! Directed knowledge graph over events, entities and event types.
//!
//! The graph is built once from a record stream and is immutable afterwards.
//! Objective attributions are evaluated under a closed-world assumption: a
//! missing edge means `false`.

pub mod format;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    AttrValue, AttributionKind, AttributionSignature, Entity, Event, EventTypeTaxonomy, Location, ModelError,
    Subjectivity, TimeSpec, Viewpoint,
};
use format::{Record, RoleAssignment};

const SCOPE_WARNING_YEARS: i64 = 50;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("line {line}: malformed record: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: ModelError },
    #[error("line {line}: {what} `{id}` is not declared")]
    Dangling { line: usize, what: &'static str, id: String },
    #[error("line {line}: duplicate {what} `{id}`")]
    Duplicate { line: usize, what: &'static str, id: String },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("{what} `{id}` not found")]
    NotFound { what: &'static str, id: String },
    #[error("unknown event type `{0}`")]
    UnknownType(String),
    #[error("`{0}` is a subjective attribution; evaluate it against documents, not the graph")]
    SubjectiveMisuse(String),
    #[error("attribution `{name}`: {message}")]
    Arity { name: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationWarning {
    pub event: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum NodeRef {
    Event(String),
    Entity(String),
    Type(String),
    Collection(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "label", rename_all = "snake_case")]
pub enum EdgeLabel {
    HasType,
    HasParticipant,
    HasRole { role: String },
    Supertype,
    Objective { attribution: String, value: bool },
    HasCollection,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub label: EdgeLabel,
    pub source: NodeRef,
    pub target: NodeRef,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct FactKey {
    attribution: String,
    event: String,
    entity: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    taxonomy: EventTypeTaxonomy,
    locations: BTreeMap<String, Location>,
    viewpoints: BTreeMap<String, Viewpoint>,
    schema: BTreeMap<String, AttributionSignature>,
    entities: BTreeMap<String, Entity>,
    events: BTreeMap<String, Event>,
    facts: BTreeMap<FactKey, bool>,
    collections: BTreeMap<String, String>,
    warnings: Vec<ValidationWarning>,
}

/// Parses and validates a KG file. Either the whole stream is accepted or nothing is.
pub fn ingest_kg<R: BufRead>(reader: R) -> Result<KnowledgeGraph, KgError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(&line).map_err(|e| KgError::Syntax { line: line_no, message: e.to_string() })?;
        records.push((line_no, rec));
    }
    KnowledgeGraph::from_records(records)
}

pub fn ingest_kg_str(text: &str) -> Result<KnowledgeGraph, KgError> {
    ingest_kg(text.as_bytes())
}

impl KnowledgeGraph {
    pub fn from_records(mut records: Vec<(usize, Record)>) -> Result<Self, KgError> {
        records.sort_by_key(|(line, r)| (r.rank(), *line));
        let mut kg = KnowledgeGraph::default();
        for (line, rec) in records {
            kg.apply(line, rec)?;
        }
        kg.check_locations()?;
        kg.taxonomy.topological_order()?;
        Ok(kg)
    }

    fn apply(&mut self, line: usize, rec: Record) -> Result<(), KgError> {
        let invalid = |source| KgError::Invalid { line, source };
        match rec {
            Record::Type { id } => self.taxonomy.add_type(id).map_err(invalid)?,
            Record::Role { id } => self.taxonomy.add_role(id).map_err(invalid)?,
            Record::Supertype { child, parent } => {
                for t in [&child, &parent] {
                    if !self.taxonomy.contains(t) {
                        return Err(KgError::Dangling { line, what: "type", id: t.clone() });
                    }
                }
                self.taxonomy.add_supertype(&child, &parent).map_err(invalid)?
            }
            Record::RoleSchema { ty, roles } => {
                if !self.taxonomy.contains(&ty) {
                    return Err(KgError::Dangling { line, what: "type", id: ty });
                }
                if let Some(r) = roles.iter().find(|r| !self.taxonomy.has_role(r)) {
                    return Err(KgError::Dangling { line, what: "role", id: r.clone() });
                }
                self.taxonomy.set_roles(&ty, roles).map_err(invalid)?
            }
            Record::Location { id, name, parent } => {
                if self.locations.contains_key(&id) {
                    return Err(KgError::Duplicate { line, what: "location", id });
                }
                self.locations.insert(id.clone(), Location { id, name, parent });
            }
            Record::Viewpoint { id, name } => {
                if self.viewpoints.contains_key(&id) {
                    return Err(KgError::Duplicate { line, what: "viewpoint", id });
                }
                self.viewpoints.insert(id.clone(), Viewpoint { id, name });
            }
            Record::Attribution { name, kind, subjectivity } => {
                if self.schema.contains_key(&name) {
                    return Err(KgError::Duplicate { line, what: "attribution", id: name });
                }
                let sig = AttributionSignature::new(name.clone(), kind, subjectivity).map_err(invalid)?;
                self.schema.insert(name, sig);
            }
            Record::Entity { id, name, aliases, attributes } => {
                if self.entities.contains_key(&id) {
                    return Err(KgError::Duplicate { line, what: "entity", id });
                }
                let e = Entity::new(id.clone(), name, aliases, attributes).map_err(invalid)?;
                self.entities.insert(id, e);
            }
            Record::Event { label, time, location, types, participants, roles } => {
                if self.events.contains_key(&label) {
                    return Err(KgError::Duplicate { line, what: "event", id: label });
                }
                if !self.locations.contains_key(&location) {
                    return Err(KgError::Dangling { line, what: "location", id: location });
                }
                if let Some(t) = types.iter().find(|t| !self.taxonomy.contains(t)) {
                    return Err(KgError::Dangling { line, what: "type", id: t.clone() });
                }
                if let Some(p) = participants.iter().find(|p| !self.entities.contains_key(*p)) {
                    return Err(KgError::Dangling { line, what: "entity", id: p.clone() });
                }
                if let Some(r) = roles.iter().find(|r| !self.taxonomy.has_role(&r.role)) {
                    return Err(KgError::Dangling { line, what: "role", id: r.role.clone() });
                }
                let ev = Event::new(
                    label.clone(),
                    time,
                    location,
                    types,
                    participants,
                    roles.into_iter().map(|r| (r.entity, r.role)),
                    &self.taxonomy,
                )
                .map_err(invalid)?;
                self.scope_warnings(&ev);
                self.events.insert(label, ev);
            }
            Record::Objective { attribution, event, entity, value } => {
                let Some(sig) = self.schema.get(&attribution) else {
                    return Err(KgError::Dangling { line, what: "attribution", id: attribution });
                };
                if sig.subjectivity == Subjectivity::Subjective {
                    return Err(KgError::Schema {
                        line,
                        message: format!("`{attribution}` is subjective and cannot be stored as an objective edge"),
                    });
                }
                let Some(ev) = self.events.get(&event) else {
                    return Err(KgError::Dangling { line, what: "event", id: event });
                };
                match (sig.kind, &entity) {
                    (AttributionKind::Event, None) => {}
                    (AttributionKind::EntityInEvent, Some(e)) => {
                        if !ev.participants().contains(e) {
                            return Err(KgError::Schema {
                                line,
                                message: format!("`{e}` is not a participant of `{event}`"),
                            });
                        }
                    }
                    (AttributionKind::Entity, _) => {
                        return Err(KgError::Schema {
                            line,
                            message: format!(
                                "`{attribution}` is an entity attribution; store it as an entity attribute"
                            ),
                        })
                    }
                    (AttributionKind::Event, Some(_)) => {
                        return Err(KgError::Schema { line, message: format!("`{attribution}` takes no entity") })
                    }
                    (AttributionKind::EntityInEvent, None) => {
                        return Err(KgError::Schema { line, message: format!("`{attribution}` requires an entity") })
                    }
                }
                let key = FactKey { attribution, event, entity };
                if self.facts.insert(key.clone(), value).is_some() {
                    return Err(KgError::Duplicate { line, what: "objective edge", id: key.attribution });
                }
            }
            Record::CollectionLink { event, collection } => {
                if !self.events.contains_key(&event) {
                    return Err(KgError::Dangling { line, what: "event", id: event });
                }
                if self.collections.contains_key(&event) {
                    return Err(KgError::Duplicate { line, what: "collection link for event", id: event });
                }
                self.collections.insert(event, collection);
            }
        }
        Ok(())
    }

    fn scope_warnings(&mut self, ev: &Event) {
        if ev.time().span_days() > SCOPE_WARNING_YEARS * 365 + SCOPE_WARNING_YEARS / 4 {
            self.warnings.push(ValidationWarning {
                event: ev.label().to_owned(),
                message: format!("spans more than {SCOPE_WARNING_YEARS} years"),
            });
        }
        let world = |s: &str| s.eq_ignore_ascii_case("world");
        let loc = &self.locations[ev.location()];
        if world(&loc.id) || world(&loc.name) {
            self.warnings
                .push(ValidationWarning { event: ev.label().to_owned(), message: "located at world scale".into() });
        }
    }

    fn check_locations(&self) -> Result<(), KgError> {
        for loc in self.locations.values() {
            let mut seen = BTreeSet::new();
            let mut cur = Some(loc);
            while let Some(l) = cur {
                if !seen.insert(l.id.as_str()) {
                    return Err(ModelError::LocationCycle(loc.id.clone()).into());
                }
                cur = match &l.parent {
                    Some(p) => Some(
                        self.locations.get(p).ok_or_else(|| KgError::NotFound { what: "location", id: p.clone() })?,
                    ),
                    None => None,
                };
            }
        }
        Ok(())
    }

    pub fn taxonomy(&self) -> &EventTypeTaxonomy {
        &self.taxonomy
    }

    pub fn warnings(&self) -> &[ValidationWarning] {
        &self.warnings
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.events.values()
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn viewpoints(&self) -> impl Iterator<Item = &Viewpoint> {
        self.viewpoints.values()
    }

    pub fn locations(&self) -> impl Iterator<Item = &Location> {
        self.locations.values()
    }

    pub fn attributions(&self) -> impl Iterator<Item = &AttributionSignature> {
        self.schema.values()
    }

    pub fn attribution(&self, name: &str) -> Option<&AttributionSignature> {
        self.schema.get(name)
    }

    pub fn event(&self, label: &str) -> Result<&Event, KgError> {
        self.events.get(label).ok_or_else(|| KgError::NotFound { what: "event", id: label.to_owned() })
    }

    pub fn entity(&self, id: &str) -> Result<&Entity, KgError> {
        self.entities.get(id).ok_or_else(|| KgError::NotFound { what: "entity", id: id.to_owned() })
    }

    /// Resolves an entity by id first, then by exact name.
    pub fn resolve_entity(&self, key: &str) -> Option<&Entity> {
        self.entities.get(key).or_else(|| self.entities.values().find(|e| e.name() == key))
    }

    pub fn has_viewpoint(&self, id: &str) -> bool {
        self.viewpoints.contains_key(id)
    }

    pub fn has_location(&self, id: &str) -> bool {
        self.locations.contains_key(id)
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn event_types(&self, label: &str) -> Result<&BTreeSet<String>, KgError> {
        Ok(self.event(label)?.types())
    }

    pub fn participants(&self, label: &str) -> Result<&BTreeSet<String>, KgError> {
        Ok(self.event(label)?.participants())
    }

    pub fn roles_for_event(&self, label: &str) -> Result<BTreeSet<String>, KgError> {
        Ok(self.event(label)?.roles_for_event(&self.taxonomy)?)
    }

    pub fn role_of(&self, label: &str, entity: &str) -> Result<Option<&str>, KgError> {
        Ok(self.event(label)?.role_of(entity)?)
    }

    pub fn attribute_at(&self, entity: &str, name: &str, at: &TimeSpec) -> Result<Option<&AttrValue>, KgError> {
        Ok(self.entity(entity)?.attribute_at(name, at))
    }

    /// Events typed `ty` directly, or typed by any descendant of `ty` when `as_supertype`.
    pub fn events_matching_type(&self, ty: &str, as_supertype: bool) -> Result<Vec<&Event>, KgError> {
        if !self.taxonomy.contains(ty) {
            return Err(KgError::UnknownType(ty.to_owned()));
        }
        let accepted: BTreeSet<String> =
            if as_supertype { self.taxonomy.descendants(ty) } else { BTreeSet::from([ty.to_owned()]) };
        Ok(self.events.values().filter(|ev| ev.types().iter().any(|t| accepted.contains(t))).collect())
    }

    pub fn collection_of(&self, label: &str) -> Result<Option<&str>, KgError> {
        self.event(label)?;
        Ok(self.collections.get(label).map(String::as_str))
    }

    /// Evaluates an objective attribution. Missing edges are `false`.
    ///
    /// Entity attributions are read from time-qualified entity attributes at the
    /// event's time, so `possesses_nuclear_weapons(Russia)` inside a 2022 event
    /// looks at the 2022 value.
    pub fn check_objective(&self, attribution: &str, event: &str, entity: Option<&str>) -> Result<bool, KgError> {
        let sig = self
            .schema
            .get(attribution)
            .ok_or_else(|| KgError::NotFound { what: "attribution", id: attribution.to_owned() })?;
        if sig.is_subjective() {
            return Err(KgError::SubjectiveMisuse(attribution.to_owned()));
        }
        let ev = self.event(event)?;
        let arity = |message: &str| KgError::Arity { name: attribution.to_owned(), message: message.to_owned() };
        match (sig.kind, entity) {
            (AttributionKind::Entity, Some(e)) => {
                Ok(self.entity(e)?.attribute_at(attribution, ev.time()) == Some(&AttrValue::Bool(true)))
            }
            (AttributionKind::Event, None) => Ok(self.fact(attribution, event, None)),
            (AttributionKind::EntityInEvent, Some(e)) => {
                self.entity(e)?;
                Ok(self.fact(attribution, event, Some(e)))
            }
            (AttributionKind::Event, Some(_)) => Err(arity("event attributions take no entity")),
            (_, None) => Err(arity("an entity argument is required")),
        }
    }

    fn fact(&self, attribution: &str, event: &str, entity: Option<&str>) -> bool {
        let key =
            FactKey { attribution: attribution.to_owned(), event: event.to_owned(), entity: entity.map(str::to_owned) };
        self.facts.get(&key).copied().unwrap_or(false)
    }

    pub fn role_equals(&self, role: &str, entity: &str, event: &str) -> Result<bool, KgError> {
        let ev = self.event(event)?;
        Ok(ev.participants().contains(entity) && ev.role_of(entity)? == Some(role))
    }

    pub fn participant_count(&self, event: &str) -> Result<usize, KgError> {
        Ok(self.event(event)?.participants().len())
    }

    pub fn time_within(&self, event: &str, window: &TimeSpec) -> Result<bool, KgError> {
        let t = self.event(event)?.time();
        Ok(window.start() <= t.start() && t.end() <= window.end())
    }

    /// True if the event's location is `location` or transitively contained in it.
    pub fn location_within(&self, event: &str, location: &str) -> Result<bool, KgError> {
        let mut cur = Some(self.event(event)?.location());
        while let Some(id) = cur {
            if id == location {
                return Ok(true);
            }
            cur = self.locations.get(id).and_then(|l| l.parent.as_deref());
        }
        Ok(false)
    }

    pub fn nodes(&self) -> BTreeSet<NodeRef> {
        let mut out = BTreeSet::new();
        out.extend(self.events.keys().cloned().map(NodeRef::Event));
        out.extend(self.entities.keys().cloned().map(NodeRef::Entity));
        out.extend(self.taxonomy.types().map(|t| NodeRef::Type(t.to_owned())));
        out
    }

    pub fn edges(&self) -> BTreeSet<Edge> {
        let mut out = BTreeSet::new();
        for (child, parent) in self.taxonomy.supertype_edges() {
            out.insert(Edge {
                label: EdgeLabel::Supertype,
                source: NodeRef::Type(child.to_owned()),
                target: NodeRef::Type(parent.to_owned()),
            });
        }
        for ev in self.events.values() {
            let src = NodeRef::Event(ev.label().to_owned());
            for t in ev.types() {
                out.insert(Edge { label: EdgeLabel::HasType, source: src.clone(), target: NodeRef::Type(t.clone()) });
            }
            for p in ev.participants() {
                out.insert(Edge {
                    label: EdgeLabel::HasParticipant,
                    source: src.clone(),
                    target: NodeRef::Entity(p.clone()),
                });
            }
            for (e, r) in ev.role_assignments() {
                out.insert(Edge {
                    label: EdgeLabel::HasRole { role: r.to_owned() },
                    source: src.clone(),
                    target: NodeRef::Entity(e.to_owned()),
                });
            }
        }
        for (k, v) in &self.facts {
            let event = NodeRef::Event(k.event.clone());
            let source = k.entity.clone().map(NodeRef::Entity).unwrap_or_else(|| event.clone());
            out.insert(Edge {
                label: EdgeLabel::Objective { attribution: k.attribution.clone(), value: *v },
                source,
                target: event,
            });
        }
        for (ev, coll) in &self.collections {
            out.insert(Edge {
                label: EdgeLabel::HasCollection,
                source: NodeRef::Event(ev.clone()),
                target: NodeRef::Collection(coll.clone()),
            });
        }
        out
    }

    /// Canonical record list; ingesting it reproduces an equal graph.
    pub fn to_records(&self) -> Vec<Record> {
        let mut out = Vec::new();
        out.extend(self.taxonomy.types().map(|t| Record::Type { id: t.to_owned() }));
        out.extend(self.taxonomy.role_vocabulary().map(|r| Record::Role { id: r.to_owned() }));
        out.extend(
            self.taxonomy
                .supertype_edges()
                .map(|(c, p)| Record::Supertype { child: c.to_owned(), parent: p.to_owned() }),
        );
        for t in self.taxonomy.types() {
            let roles = self.taxonomy.roles(t).unwrap_or_default();
            if !roles.is_empty() {
                out.push(Record::RoleSchema { ty: t.to_owned(), roles: roles.into_iter().collect() });
            }
        }
        out.extend(self.locations.values().map(|l| Record::Location {
            id: l.id.clone(),
            name: l.name.clone(),
            parent: l.parent.clone(),
        }));
        out.extend(self.viewpoints.values().map(|v| Record::Viewpoint { id: v.id.clone(), name: v.name.clone() }));
        out.extend(self.schema.values().map(|s| Record::Attribution {
            name: s.name.clone(),
            kind: s.kind,
            subjectivity: s.subjectivity,
        }));
        out.extend(self.entities.values().map(|e| Record::Entity {
            id: e.id().to_owned(),
            name: e.name().to_owned(),
            aliases: e.aliases().iter().cloned().collect(),
            attributes: e.attributes().to_vec(),
        }));
        out.extend(self.events.values().map(|ev| {
            Record::Event {
                label: ev.label().to_owned(),
                time: *ev.time(),
                location: ev.location().to_owned(),
                types: ev.types().iter().cloned().collect(),
                participants: ev.participants().iter().cloned().collect(),
                roles: ev
                    .role_assignments()
                    .map(|(e, r)| RoleAssignment { entity: e.to_owned(), role: r.to_owned() })
                    .collect(),
            }
        }));
        out.extend(self.facts.iter().map(|(k, v)| Record::Objective {
            attribution: k.attribution.clone(),
            event: k.event.clone(),
            entity: k.entity.clone(),
            value: *v,
        }));
        out.extend(
            self.collections.iter().map(|(e, c)| Record::CollectionLink { event: e.clone(), collection: c.clone() }),
        );
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in self.to_records() {
            serde_json::to_writer(&mut w, &r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = r#"
{"record":"type","id":"conflict"}
{"record":"type","id":"war"}
{"record":"supertype","child":"war","parent":"conflict"}
{"record":"role","id":"winner"}
{"record":"role_schema","type":"war","roles":["winner"]}
{"record":"location","id":"here","name":"Here"}
{"record":"attribution","name":"is_underdog","kind":"entity-in-event","subjectivity":"objective"}
{"record":"attribution","name":"is_aggressor","kind":"entity-in-event","subjectivity":"subjective"}
{"record":"entity","id":"A","name":"A"}
{"record":"entity","id":"B","name":"B"}
{"record":"event","label":"W","time":{"point":"2000-01-01"},"location":"here","types":["war"],"participants":["A","B"],"roles":[{"entity":"A","role":"winner"}]}
{"record":"objective","attribution":"is_underdog","event":"W","entity":"A"}
{"record":"collection_link","event":"W","collection":"w-docs"}
"#;

    #[test]
    fn mini_graph() {
        let kg = ingest_kg_str(MINI).unwrap();
        assert_eq!(kg.event_count(), 1);
        assert!(kg.check_objective("is_underdog", "W", Some("A")).unwrap());
        assert!(!kg.check_objective("is_underdog", "W", Some("B")).unwrap());
        assert!(matches!(kg.check_objective("is_aggressor", "W", Some("A")), Err(KgError::SubjectiveMisuse(_))));
        assert_eq!(kg.collection_of("W").unwrap(), Some("w-docs"));
        assert!(matches!(kg.collection_of("nope"), Err(KgError::NotFound { .. })));
        assert_eq!(kg.events_matching_type("conflict", true).unwrap().len(), 1);
        assert!(kg.events_matching_type("conflict", false).unwrap().is_empty());
        assert!(matches!(kg.events_matching_type("zzz", true), Err(KgError::UnknownType(_))));
    }

    #[test]
    fn empty_stream_is_empty_graph() {
        let kg = ingest_kg_str("").unwrap();
        assert_eq!(kg.event_count(), 0);
        assert!(kg.edges().is_empty());
    }

    #[test]
    fn dangling_entity_names_entity_and_line() {
        let text = MINI.replace(r#""participants":["A","B"]"#, r#""participants":["A","Ghost"]"#);
        let err = ingest_kg_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Ghost"), "{msg}");
        assert!(msg.starts_with("line 12"), "{msg}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = ingest_kg_str("{\"record\":\"type\",\"id\":\"a\"}\n{oops").unwrap_err();
        assert!(matches!(err, KgError::Syntax { line: 2, .. }));
    }

    #[test]
    fn subjective_objective_edge_rejected() {
        let text =
            format!("{MINI}\n{}", r#"{"record":"objective","attribution":"is_aggressor","event":"W","entity":"A"}"#);
        assert!(matches!(ingest_kg_str(&text), Err(KgError::Schema { .. })));
    }

    #[test]
    fn duplicate_label_rejected() {
        let dup = r#"{"record":"event","label":"W","time":{"point":"2000-01-01"},"location":"here","types":["war"]}"#;
        let text = format!("{MINI}\n{dup}");
        assert!(matches!(ingest_kg_str(&text), Err(KgError::Duplicate { what: "event", .. })));
    }

    #[test]
    fn round_trip_through_records() {
        let kg = ingest_kg_str(MINI).unwrap();
        let mut buf = Vec::new();
        kg.write_jsonl(&mut buf).unwrap();
        let again = ingest_kg(buf.as_slice()).unwrap();
        assert_eq!(kg, again);
        assert_eq!(kg.edges(), again.edges());
    }

    #[test]
    fn scope_warning_for_long_events() {
        let long = r#"{"record":"event","label":"Long","time":{"start":"1900-01-01","end":"1990-01-01"},"location":"here","types":["war"]}"#;
        let kg = ingest_kg_str(&format!("{MINI}\n{long}")).unwrap();
        assert_eq!(kg.warnings().len(), 1);
        assert_eq!(kg.warnings()[0].event, "Long");
    }

    #[test]
    fn location_cycle_rejected() {
        let text = r#"
{"record":"location","id":"a","name":"A","parent":"b"}
{"record":"location","id":"b","name":"B","parent":"a"}
"#;
        assert!(ingest_kg_str(text).is_err());
    }
}
