use std::collections::BTreeSet;

use super::{candidates_for, record_positives, EngineError};
use crate::config::Config;
use crate::corpus::CorpusStore;
use crate::graph::KnowledgeGraph;
use crate::index::{build_index, AttributionIndexSet, IndexError, Positive};
use crate::model::AttributionKind;
use crate::witness::{Assessor, WitnessQuery};

/// Assesses every document of every event collection for every subjective
/// attribution and collects the witness-grade answers.
///
/// Besides the event's own participants, each entity outside the event is
/// tried as an extra candidate, so that atoms naming a constant are covered.
/// Any assessor failure aborts the scan: a silently skipped document would
/// turn into an unsound negative.
pub fn scan_positives(
    kg: &KnowledgeGraph,
    corpus: &CorpusStore,
    assessor: &dyn Assessor,
    config: &Config,
) -> Result<BTreeSet<Positive>, EngineError> {
    let threshold = config.assessment.confidence_threshold;
    let known = |v: &str| kg.has_viewpoint(v);
    let attributions: Vec<_> = kg.attributions().filter(|a| a.is_subjective()).collect();
    let mut out = BTreeSet::new();
    for ev in kg.events() {
        let Some(coll) = kg.collection_of(ev.label())? else { continue };
        let Ok(docs) = corpus.documents_for(coll, None) else { continue };
        let base = candidates_for(kg, ev, None);
        let outsiders: Vec<&str> = kg.entities().map(|e| e.id()).filter(|e| !ev.participants().contains(*e)).collect();
        for sig in &attributions {
            let question = config.template(&sig.name).instantiate(ev.label());
            let query = WitnessQuery::new(&sig.name, &question, &base, None).expect("no required participant");
            for doc in &docs {
                let r = assessor
                    .assess(&query.request(doc))
                    .map_err(|source| EngineError::Assessor { doc_id: doc.doc_id.clone(), source })?;
                record_positives(&mut out, sig.kind, &sig.name, ev.label(), doc, &r, threshold, &known);
            }
            if sig.kind != AttributionKind::EntityInEvent {
                continue;
            }
            for e in &outsiders {
                let extended = candidates_for(kg, ev, Some(e));
                let query = WitnessQuery::new(&sig.name, &question, &extended, None).expect("no required participant");
                for doc in &docs {
                    let r = assessor
                        .assess(&query.request(doc))
                        .map_err(|source| EngineError::Assessor { doc_id: doc.doc_id.clone(), source })?;
                    if r.canonical_target.as_deref() == Some(*e) {
                        record_positives(&mut out, sig.kind, &sig.name, ev.label(), doc, &r, threshold, &known);
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum ScanBuildError {
    #[error(transparent)]
    Scan(#[from] EngineError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Scans the corpus and builds an index covering every subjective attribution.
pub fn build_index_from_corpus(
    kg: &KnowledgeGraph,
    corpus: &CorpusStore,
    assessor: &dyn Assessor,
    config: &Config,
) -> Result<AttributionIndexSet, ScanBuildError> {
    let positives = scan_positives(kg, corpus, assessor, config)?;
    Ok(index_from_positives(kg, &positives, config)?)
}

/// Builds an index over `positives`, covering every subjective attribution and KG viewpoint.
pub fn index_from_positives(
    kg: &KnowledgeGraph,
    positives: &BTreeSet<Positive>,
    config: &Config,
) -> Result<AttributionIndexSet, IndexError> {
    let attributions: BTreeSet<String> =
        kg.attributions().filter(|a| a.is_subjective()).map(|a| a.name.clone()).collect();
    let viewpoints: BTreeSet<String> = kg.viewpoints().map(|v| v.id.clone()).collect();
    build_index(positives.iter().cloned(), &attributions, &viewpoints, &config.build_options())
}
