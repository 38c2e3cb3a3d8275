//! Document collections linked from events, partitioned by viewpoint.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::trigram_cosine;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed document record: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: document `{doc_id}` has no viewpoint (none given and outlet `{outlet}` is unmapped)")]
    NoViewpoint { line: usize, doc_id: String, outlet: String },
    #[error("line {line}: duplicate document id `{doc_id}`")]
    DuplicateDoc { line: usize, doc_id: String },
    #[error("line {line}: document `{doc_id}` names unknown viewpoint `{viewpoint}`")]
    UnknownViewpoint { line: usize, doc_id: String, viewpoint: String },
    #[error("collection `{0}` not found")]
    UnknownCollection(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub doc_id: String,
    pub collection: String,
    pub outlet: String,
    #[serde(default)]
    pub viewpoints: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    pub headline: String,
    pub body: String,
}

impl Document {
    /// Text handed to assessors: headline, newline, body.
    pub fn context(&self) -> String {
        format!("{}\n{}", self.headline, self.body)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentCollection {
    pub id: String,
    pub doc_ids: Vec<String>,
}

/// Optional pre-processing applied while ingesting.
#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    /// Outlet → viewpoints, used for records that carry no viewpoints of their own.
    pub outlet_viewpoints: BTreeMap<String, Vec<String>>,
    /// When set, every viewpoint must be one of these.
    pub known_viewpoints: Option<BTreeSet<String>>,
    /// Drop a document whose headline reaches this trigram similarity with an
    /// earlier headline in the same collection.
    pub dedup_headline_similarity: Option<f64>,
    /// Keep only dated documents inside this closed window. Undated documents are kept.
    pub date_window: Option<(NaiveDate, NaiveDate)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorpusStore {
    docs: BTreeMap<String, Document>,
    collections: BTreeMap<String, DocumentCollection>,
    dropped: usize,
}

pub fn ingest_corpus<R: BufRead>(reader: R, opts: &IngestOptions) -> Result<CorpusStore, CorpusError> {
    let mut store = CorpusStore::default();
    let mut headlines: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut doc: Document =
            serde_json::from_str(&line).map_err(|e| CorpusError::Syntax { line: line_no, message: e.to_string() })?;
        if doc.viewpoints.is_empty() {
            if let Some(vs) = opts.outlet_viewpoints.get(&doc.outlet) {
                doc.viewpoints.extend(vs.iter().cloned());
            }
        }
        if doc.viewpoints.is_empty() {
            return Err(CorpusError::NoViewpoint { line: line_no, doc_id: doc.doc_id, outlet: doc.outlet });
        }
        if let Some(known) = &opts.known_viewpoints {
            if let Some(v) = doc.viewpoints.iter().find(|v| !known.contains(*v)) {
                return Err(CorpusError::UnknownViewpoint { line: line_no, viewpoint: v.clone(), doc_id: doc.doc_id });
            }
        }
        if store.docs.contains_key(&doc.doc_id) {
            return Err(CorpusError::DuplicateDoc { line: line_no, doc_id: doc.doc_id });
        }
        if let (Some((from, to)), Some(date)) = (opts.date_window, doc.date) {
            if date < from || date > to {
                store.dropped += 1;
                continue;
            }
        }
        if let Some(threshold) = opts.dedup_headline_similarity {
            let seen = headlines.entry(doc.collection.clone()).or_default();
            if seen.iter().any(|h| trigram_cosine(h, &doc.headline) >= threshold) {
                store.dropped += 1;
                continue;
            }
            seen.push(doc.headline.clone());
        }
        store.insert(doc);
    }
    for c in store.collections.values_mut() {
        c.doc_ids.sort();
    }
    Ok(store)
}

pub fn ingest_corpus_str(text: &str, opts: &IngestOptions) -> Result<CorpusStore, CorpusError> {
    ingest_corpus(text.as_bytes(), opts)
}

impl CorpusStore {
    fn insert(&mut self, doc: Document) {
        self.collections
            .entry(doc.collection.clone())
            .or_insert_with(|| DocumentCollection { id: doc.collection.clone(), doc_ids: Vec::new() })
            .doc_ids
            .push(doc.doc_id.clone());
        self.docs.insert(doc.doc_id.clone(), doc);
    }

    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self, CorpusError> {
        let mut store = CorpusStore::default();
        for (i, doc) in docs.into_iter().enumerate() {
            if doc.viewpoints.is_empty() {
                return Err(CorpusError::NoViewpoint { line: i + 1, doc_id: doc.doc_id, outlet: doc.outlet });
            }
            if store.docs.contains_key(&doc.doc_id) {
                return Err(CorpusError::DuplicateDoc { line: i + 1, doc_id: doc.doc_id });
            }
            store.insert(doc);
        }
        for c in store.collections.values_mut() {
            c.doc_ids.sort();
        }
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Documents removed by ingestion filters.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.docs.get(doc_id)
    }

    pub fn collections(&self) -> impl Iterator<Item = &DocumentCollection> {
        self.collections.values()
    }

    pub fn collection(&self, id: &str) -> Option<&DocumentCollection> {
        self.collections.get(id)
    }

    /// Documents of `collection` whose viewpoints intersect `filter`, ordered by doc id.
    /// `None` selects the whole collection.
    pub fn documents_for(
        &self,
        collection: &str,
        filter: Option<&BTreeSet<String>>,
    ) -> Result<Vec<&Document>, CorpusError> {
        let coll =
            self.collections.get(collection).ok_or_else(|| CorpusError::UnknownCollection(collection.to_owned()))?;
        Ok(coll
            .doc_ids
            .iter()
            .map(|id| &self.docs[id])
            .filter(|d| filter.is_none_or(|f| d.viewpoints.iter().any(|v| f.contains(v))))
            .collect())
    }

    /// Document count per viewpoint in a collection.
    pub fn viewpoint_counts(&self, collection: &str) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        if let Some(coll) = self.collections.get(collection) {
            for id in &coll.doc_ids {
                for v in &self.docs[id].viewpoints {
                    *out.entry(v.as_str()).or_insert(0) += 1;
                }
            }
        }
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for d in self.docs.values() {
            serde_json::to_writer(&mut w, d)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
