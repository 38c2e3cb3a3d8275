//! Narrative prototype query processing over an event-centric knowledge graph.

pub mod bench;
pub mod config;
pub mod corpus;
pub mod dsl;
pub mod engine;
pub mod graph;
pub mod index;
pub mod model;
pub mod synth;
pub mod text;
pub mod witness;
pub mod workspace;
