//! Domain types for events, participants, roles, viewpoints and attributions.
//!
//! Everything here is validated on construction and immutable afterwards; the
//! knowledge graph owns collections of these values.

mod taxonomy;
mod time;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use taxonomy::EventTypeTaxonomy;
pub use time::TimeSpec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("interval start {start} is after end {end}")]
    InvertedInterval { start: NaiveDate, end: NaiveDate },
    #[error("time must be either {{\"point\"}} or {{\"start\", \"end\"}}")]
    MalformedTime,
    #[error("duplicate {kind} `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("unknown event type `{0}`")]
    UnknownType(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("supertype edge {child} -> {parent} would create a cycle")]
    TaxonomyCycle { child: String, parent: String },
    #[error("entity `{0}` has an empty name")]
    EmptyName(String),
    #[error("entity `{entity}` has more than one unqualified value for `{attribute}`")]
    DuplicateUnqualified { entity: String, attribute: String },
    #[error("entity `{entity}` has overlapping qualified values for `{attribute}`")]
    OverlappingQualifiers { entity: String, attribute: String },
    #[error("event `{0}` has no types")]
    UntypedEvent(String),
    #[error("event `{event}`: role assignment for non-participant `{entity}`")]
    RoleForNonParticipant { event: String, entity: String },
    #[error("event `{event}`: role `{role}` is not permitted by its types")]
    RoleNotPermitted { event: String, role: String },
    #[error("event `{event}`: participant `{entity}` has more than one role")]
    MultipleRoles { event: String, entity: String },
    #[error("`{entity}` is not a participant of `{event}`")]
    NotAParticipant { event: String, entity: String },
    #[error("subjective attribution `{0}` must be of kind event or entity-in-event")]
    SubjectiveEntityAttribution(String),
    #[error("location containment cycle through `{0}`")]
    LocationCycle(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

/// An attribute value. Comparisons across variants are always false.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Int(i64),
    Text(String),
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Bool(b) => write!(f, "{b}"),
            AttrValue::Int(i) => write!(f, "{i}"),
            AttrValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub value: AttrValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entity {
    id: String,
    name: String,
    aliases: BTreeSet<String>,
    attributes: Vec<Attribute>,
}

impl Entity {
    /// Validates the entity. The name is always added to the alias set.
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        aliases: impl IntoIterator<Item = String>,
        attributes: Vec<Attribute>,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        let name = name.into();
        if name.trim().is_empty() {
            return Err(ModelError::EmptyName(id));
        }
        let mut aliases: BTreeSet<String> = aliases.into_iter().collect();
        aliases.insert(name.clone());

        let mut by_name: BTreeMap<&str, Vec<&Attribute>> = BTreeMap::new();
        for a in &attributes {
            by_name.entry(a.name.as_str()).or_default().push(a);
        }
        for (attr, values) in by_name {
            let unqualified = values.iter().filter(|a| a.time.is_none()).count();
            if unqualified > 1 {
                return Err(ModelError::DuplicateUnqualified { entity: id, attribute: attr.to_owned() });
            }
            let qualified: Vec<&TimeSpec> = values.iter().filter_map(|a| a.time.as_ref()).collect();
            for (i, a) in qualified.iter().enumerate() {
                if qualified[i + 1..].iter().any(|b| a.overlaps(b)) {
                    return Err(ModelError::OverlappingQualifiers { entity: id, attribute: attr.to_owned() });
                }
            }
        }
        Ok(Entity { id, name, aliases, attributes })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn aliases(&self) -> &BTreeSet<String> {
        &self.aliases
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// Value of `name` at time `at`.
    ///
    /// A qualified value wins when its qualifier overlaps `at`; otherwise the
    /// unqualified value, if any, is the default.
    pub fn attribute_at(&self, name: &str, at: &TimeSpec) -> Option<&AttrValue> {
        let mut default = None;
        for a in self.attributes.iter().filter(|a| a.name == name) {
            match &a.time {
                Some(t) if t.overlaps(at) => return Some(&a.value),
                Some(_) => {}
                None => default = Some(&a.value),
            }
        }
        default
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    label: String,
    time: TimeSpec,
    location: String,
    types: BTreeSet<String>,
    participants: BTreeSet<String>,
    roles: BTreeMap<String, String>,
}

impl Event {
    /// Builds an event and checks its types and role assignments against the taxonomy.
    pub fn new(
        label: impl Into<String>,
        time: TimeSpec,
        location: impl Into<String>,
        types: impl IntoIterator<Item = String>,
        participants: impl IntoIterator<Item = String>,
        role_assignments: impl IntoIterator<Item = (String, String)>,
        taxonomy: &EventTypeTaxonomy,
    ) -> Result<Self, ModelError> {
        let label = label.into();
        let types: BTreeSet<String> = types.into_iter().collect();
        if types.is_empty() {
            return Err(ModelError::UntypedEvent(label));
        }
        let mut permitted = BTreeSet::new();
        for t in &types {
            permitted.extend(taxonomy.roles(t)?);
        }
        let participants: BTreeSet<String> = participants.into_iter().collect();
        let mut roles = BTreeMap::new();
        for (entity, role) in role_assignments {
            if !participants.contains(&entity) {
                return Err(ModelError::RoleForNonParticipant { event: label, entity });
            }
            if !permitted.contains(&role) {
                return Err(ModelError::RoleNotPermitted { event: label, role });
            }
            if roles.insert(entity.clone(), role).is_some() {
                return Err(ModelError::MultipleRoles { event: label, entity });
            }
        }
        Ok(Event { label, time, location: location.into(), types, participants, roles })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn time(&self) -> &TimeSpec {
        &self.time
    }

    pub fn location(&self) -> &str {
        &self.location
    }

    /// Never empty.
    pub fn types(&self) -> &BTreeSet<String> {
        &self.types
    }

    pub fn participants(&self) -> &BTreeSet<String> {
        &self.participants
    }

    pub fn role_assignments(&self) -> impl Iterator<Item = (&str, &str)> {
        self.roles.iter().map(|(e, r)| (e.as_str(), r.as_str()))
    }

    /// Union of the roles permitted by each of the event's types.
    pub fn roles_for_event(&self, taxonomy: &EventTypeTaxonomy) -> Result<BTreeSet<String>, ModelError> {
        let mut out = BTreeSet::new();
        for t in &self.types {
            out.extend(taxonomy.roles(t)?);
        }
        Ok(out)
    }

    /// The role assigned to a participant. Partial: participants may hold no role.
    pub fn role_of(&self, entity: &str) -> Result<Option<&str>, ModelError> {
        if !self.participants.contains(entity) {
            return Err(ModelError::NotAParticipant { event: self.label.clone(), entity: entity.to_owned() });
        }
        Ok(self.roles.get(entity).map(String::as_str))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub id: String,
    pub name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributionKind {
    Entity,
    Event,
    EntityInEvent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subjectivity {
    Objective,
    Subjective,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSignature")]
pub struct AttributionSignature {
    pub name: String,
    pub kind: AttributionKind,
    pub subjectivity: Subjectivity,
}

#[derive(Deserialize)]
struct RawSignature {
    name: String,
    kind: AttributionKind,
    subjectivity: Subjectivity,
}

impl TryFrom<RawSignature> for AttributionSignature {
    type Error = ModelError;

    fn try_from(raw: RawSignature) -> Result<Self, Self::Error> {
        AttributionSignature::new(raw.name, raw.kind, raw.subjectivity)
    }
}

impl AttributionSignature {
    pub fn new(name: impl Into<String>, kind: AttributionKind, subjectivity: Subjectivity) -> Result<Self, ModelError> {
        let name = name.into();
        if subjectivity == Subjectivity::Subjective && kind == AttributionKind::Entity {
            return Err(ModelError::SubjectiveEntityAttribution(name));
        }
        Ok(AttributionSignature { name, kind, subjectivity })
    }

    pub fn is_subjective(&self) -> bool {
        self.subjectivity == Subjectivity::Subjective
    }
}
