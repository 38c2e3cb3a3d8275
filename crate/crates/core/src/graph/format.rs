//! Line-delimited JSON records for the knowledge-graph file.
//!
//! One JSON object per line, discriminated by its `record` field. Blank lines
//! are skipped. Field order within each record kind is fixed and is the order
//! produced by [`KnowledgeGraph::to_records`](super::KnowledgeGraph::to_records).

use serde::{Deserialize, Serialize};

use crate::model::{Attribute, AttributionKind, Subjectivity, TimeSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case", deny_unknown_fields)]
pub enum Record {
    Type {
        id: String,
    },
    Supertype {
        child: String,
        parent: String,
    },
    Role {
        id: String,
    },
    RoleSchema {
        #[serde(rename = "type")]
        ty: String,
        roles: Vec<String>,
    },
    Location {
        id: String,
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parent: Option<String>,
    },
    Viewpoint {
        id: String,
        name: String,
    },
    Attribution {
        name: String,
        kind: AttributionKind,
        subjectivity: Subjectivity,
    },
    Entity {
        id: String,
        name: String,
        #[serde(default)]
        aliases: Vec<String>,
        #[serde(default)]
        attributes: Vec<Attribute>,
    },
    Event {
        label: String,
        time: TimeSpec,
        location: String,
        types: Vec<String>,
        #[serde(default)]
        participants: Vec<String>,
        #[serde(default)]
        roles: Vec<RoleAssignment>,
    },
    Objective {
        attribution: String,
        event: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        entity: Option<String>,
        #[serde(default = "default_true")]
        value: bool,
    },
    CollectionLink {
        event: String,
        collection: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleAssignment {
    pub entity: String,
    pub role: String,
}

fn default_true() -> bool {
    true
}

impl Record {
    /// Ingestion order: records of an earlier rank may be referenced by later ones,
    /// regardless of their position in the file.
    pub(crate) fn rank(&self) -> u8 {
        match self {
            Record::Type { .. } | Record::Role { .. } => 0,
            Record::Supertype { .. } | Record::RoleSchema { .. } => 1,
            Record::Location { .. } | Record::Viewpoint { .. } | Record::Attribution { .. } => 2,
            Record::Entity { .. } => 3,
            Record::Event { .. } => 4,
            Record::Objective { .. } | Record::CollectionLink { .. } => 5,
        }
    }
}
