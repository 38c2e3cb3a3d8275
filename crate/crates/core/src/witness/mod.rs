//! Deciding whether a document witnesses a subjective attribution.
//!
//! An [`Assessor`] reads one document and answers the attribution's question
//! with a phrase, a confidence and, after canonicalization, the participant the
//! phrase names. [`evaluate_witnesses`] applies the confidence threshold per
//! document and the witness-count threshold per attribution, in that order.

mod baseline;
mod remote;

use std::cmp::Ordering;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ErrorPolicy;
use crate::corpus::Document;
use crate::text::trigram_cosine;

pub use baseline::LexiconAssessor;
pub use remote::{parse_response, request_body, RemoteAssessor};

pub const EVENT_MASK: &str = "<EVENT_MASK>";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WitnessError {
    #[error("question template must contain `{EVENT_MASK}` exactly once, found {found} in {template:?}")]
    Template { template: String, found: usize },
    #[error("required participant `{0}` is not among the candidates")]
    RequiredNotCandidate(String),
}

/// Failures of a remote assessment. The baseline never fails.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssessError {
    #[error("assessor connection failed: {0}")]
    Connection(String),
    #[error("assessor timed out: {0}")]
    Timeout(String),
    #[error("malformed assessor response: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuestionTemplate(String);

impl QuestionTemplate {
    pub fn new(template: &str) -> Result<Self, WitnessError> {
        let found = template.matches(EVENT_MASK).count();
        if found != 1 {
            return Err(WitnessError::Template { template: template.to_owned(), found });
        }
        Ok(QuestionTemplate(template.to_owned()))
    }

    pub fn instantiate(&self, event_label: &str) -> String {
        self.0.replacen(EVENT_MASK, event_label, 1)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub aliases: Vec<String>,
}

/// The document-independent part of an assessment request.
#[derive(Clone, Copy, Debug)]
pub struct WitnessQuery<'a> {
    pub attribution: &'a str,
    pub question: &'a str,
    pub candidates: &'a [Candidate],
    /// The participant a document must name to be a witness.
    pub required: Option<&'a str>,
}

impl<'a> WitnessQuery<'a> {
    pub fn new(
        attribution: &'a str,
        question: &'a str,
        candidates: &'a [Candidate],
        required: Option<&'a str>,
    ) -> Result<Self, WitnessError> {
        if let Some(r) = required {
            if !candidates.iter().any(|c| c.id == r) {
                return Err(WitnessError::RequiredNotCandidate(r.to_owned()));
            }
        }
        Ok(WitnessQuery { attribution, question, candidates, required })
    }

    pub fn request(&self, document: &'a Document) -> AssessmentRequest<'a> {
        AssessmentRequest {
            document,
            attribution: self.attribution,
            question: self.question,
            candidates: self.candidates,
            required: self.required,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AssessmentRequest<'a> {
    pub document: &'a Document,
    pub attribution: &'a str,
    pub question: &'a str,
    pub candidates: &'a [Candidate],
    pub required: Option<&'a str>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssessmentResult {
    pub answer_phrase: String,
    pub confidence: f64,
    pub canonical_target: Option<String>,
    pub similarity: f64,
}

impl AssessmentResult {
    pub fn empty() -> Self {
        AssessmentResult { answer_phrase: String::new(), confidence: 0.0, canonical_target: None, similarity: 0.0 }
    }
}

/// Implementations must be safe to call concurrently on distinct documents.
pub trait Assessor: Send + Sync {
    fn assess(&self, request: &AssessmentRequest<'_>) -> Result<AssessmentResult, AssessError>;
}

impl<A: Assessor + ?Sized> Assessor for Box<A> {
    fn assess(&self, request: &AssessmentRequest<'_>) -> Result<AssessmentResult, AssessError> {
        (**self).assess(request)
    }
}

impl<A: Assessor + ?Sized> Assessor for Arc<A> {
    fn assess(&self, request: &AssessmentRequest<'_>) -> Result<AssessmentResult, AssessError> {
        (**self).assess(request)
    }
}

impl<A: Assessor + ?Sized> Assessor for &A {
    fn assess(&self, request: &AssessmentRequest<'_>) -> Result<AssessmentResult, AssessError> {
        (**self).assess(request)
    }
}

/// Adds a fixed cost to every assessment, to model an expensive NLP backend.
pub struct DelayedAssessor<A> {
    inner: A,
    delay: Duration,
}

impl<A: Assessor> DelayedAssessor<A> {
    pub fn new(inner: A, delay: Duration) -> Self {
        DelayedAssessor { inner, delay }
    }
}

impl<A: Assessor> Assessor for DelayedAssessor<A> {
    fn assess(&self, request: &AssessmentRequest<'_>) -> Result<AssessmentResult, AssessError> {
        std::thread::sleep(self.delay);
        self.inner.assess(request)
    }
}

/// Best-matching candidate for `phrase` by trigram cosine over its aliases.
///
/// Returns the best similarity even when it falls below `threshold`, in which
/// case the target is absent. Ties go to the smallest id.
pub fn canonicalize(phrase: &str, candidates: &[Candidate], threshold: f64) -> (Option<String>, f64) {
    let mut best: Option<(&str, f64)> = None;
    for c in candidates {
        let sim = c.aliases.iter().map(|a| trigram_cosine(phrase, a)).fold(0.0, f64::max);
        let better = match best {
            None => true,
            Some((id, s)) => sim > s || (sim == s && c.id.as_str() < id),
        };
        if better {
            best = Some((&c.id, sim));
        }
    }
    match best {
        Some((id, sim)) if sim >= threshold && sim > 0.0 => (Some(id.to_owned()), sim),
        Some((_, sim)) => (None, sim),
        None => (None, 0.0),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdPolicy {
    /// Per-document minimum confidence.
    pub confidence: f64,
    /// Witnesses needed for the attribution to hold.
    pub min_witnesses: usize,
    /// Truncation of the reported witness list.
    pub top_k: Option<usize>,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy { confidence: 0.5, min_witnesses: 1, top_k: None }
    }
}

pub fn is_witness(result: &AssessmentResult, policy: &ThresholdPolicy, required: Option<&str>) -> bool {
    result.confidence >= policy.confidence
        && match required {
            Some(r) => result.canonical_target.as_deref() == Some(r),
            None => true,
        }
}

/// Ranking feature for witnesses. The shipped scorer is the confidence itself.
pub trait WitnessScorer: Send + Sync {
    fn score(&self, document: &Document, result: &AssessmentResult) -> f64;
}

pub struct ConfidenceScorer;

impl WitnessScorer for ConfidenceScorer {
    fn score(&self, _document: &Document, result: &AssessmentResult) -> f64 {
        result.confidence
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessVerdict {
    pub doc_id: String,
    pub is_witness: bool,
    pub rank_score: f64,
    pub confidence: f64,
    pub answer_phrase: String,
}

/// Score descending, then doc id ascending.
pub fn rank_order(a: &WitnessVerdict, b: &WitnessVerdict) -> Ordering {
    b.rank_score.total_cmp(&a.rank_score).then_with(|| a.doc_id.cmp(&b.doc_id))
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct WitnessOutcome {
    pub holds: bool,
    /// Ranked witnesses, cut to `top_k`.
    pub witnesses: Vec<WitnessVerdict>,
    pub witness_count: usize,
    pub assessed: usize,
    pub skipped_errors: usize,
}

/// Assesses every document and applies the threshold policy.
pub fn evaluate_witnesses(
    documents: &[&Document],
    query: &WitnessQuery<'_>,
    assessor: &dyn Assessor,
    policy: &ThresholdPolicy,
    on_error: ErrorPolicy,
    scorer: &dyn WitnessScorer,
) -> Result<WitnessOutcome, AssessError> {
    let mut out = WitnessOutcome::default();
    for doc in documents {
        out.assessed += 1;
        let result = match assessor.assess(&query.request(doc)) {
            Ok(r) => r,
            Err(e) if on_error == ErrorPolicy::FailQuery => return Err(e),
            Err(_) => {
                out.skipped_errors += 1;
                continue;
            }
        };
        if is_witness(&result, policy, query.required) {
            out.witnesses.push(verdict(doc, &result, scorer));
        }
    }
    Ok(finish(out, policy))
}

pub(crate) fn verdict(doc: &Document, result: &AssessmentResult, scorer: &dyn WitnessScorer) -> WitnessVerdict {
    WitnessVerdict {
        doc_id: doc.doc_id.clone(),
        is_witness: true,
        rank_score: scorer.score(doc, result),
        confidence: result.confidence,
        answer_phrase: result.answer_phrase.clone(),
    }
}

pub(crate) fn finish(mut out: WitnessOutcome, policy: &ThresholdPolicy) -> WitnessOutcome {
    out.witness_count = out.witnesses.len();
    out.holds = out.witness_count >= policy.min_witnesses.max(1);
    out.witnesses.sort_by(rank_order);
    if let Some(k) = policy.top_k {
        out.witnesses.truncate(k);
    }
    out
}
