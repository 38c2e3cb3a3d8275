//! HTTP client for a model-backed assessor.
//!
//! `POST {base}/assess` with `{question, context, candidates: [{id, aliases}]}`
//! answers `{answer, confidence, canonical_target, similarity}`.
//! `GET {base}/healthz` answers 200 once the service is ready.

use std::io::{self, Read};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{AssessError, AssessmentRequest, AssessmentResult, Assessor, Candidate};

/// Largest response body accepted.
const MAX_RESPONSE_BYTES: u64 = 1 << 20;

#[derive(Serialize)]
struct WireRequest<'a> {
    question: &'a str,
    context: String,
    candidates: &'a [Candidate],
}

#[derive(Deserialize)]
struct WireResponse {
    answer: String,
    confidence: f64,
    #[serde(deserialize_with = "Option::deserialize")]
    canonical_target: Option<String>,
    similarity: f64,
}

pub fn request_body(request: &AssessmentRequest<'_>) -> String {
    let wire =
        WireRequest { question: request.question, context: request.document.context(), candidates: request.candidates };
    serde_json::to_string(&wire).expect("request serializes")
}

/// Parses and validates a response body against the request's candidates.
pub fn parse_response(body: &str, candidates: &[Candidate]) -> Result<AssessmentResult, AssessError> {
    let wire: WireResponse = serde_json::from_str(body).map_err(|e| AssessError::Malformed(e.to_string()))?;
    if !(0.0..=1.0).contains(&wire.confidence) {
        return Err(AssessError::Malformed(format!("confidence {} outside [0, 1]", wire.confidence)));
    }
    if !(-1.0..=1.0).contains(&wire.similarity) {
        return Err(AssessError::Malformed(format!("similarity {} outside [-1, 1]", wire.similarity)));
    }
    if let Some(t) = &wire.canonical_target {
        if !candidates.iter().any(|c| &c.id == t) {
            return Err(AssessError::Malformed(format!("canonical_target `{t}` is not a candidate")));
        }
    }
    Ok(AssessmentResult {
        answer_phrase: wire.answer,
        confidence: wire.confidence,
        canonical_target: wire.canonical_target,
        similarity: wire.similarity,
    })
}

pub struct RemoteAssessor {
    agent: ureq::Agent,
    base: String,
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock)
}

fn transport_error(t: ureq::Transport) -> AssessError {
    use std::error::Error;
    let timed_out = t.source().and_then(|s| s.downcast_ref::<io::Error>()).is_some_and(is_timeout);
    if timed_out {
        return AssessError::Timeout(t.to_string());
    }
    match t.kind() {
        ureq::ErrorKind::BadStatus | ureq::ErrorKind::BadHeader | ureq::ErrorKind::TooManyRedirects => {
            AssessError::Malformed(t.to_string())
        }
        _ => AssessError::Connection(t.to_string()),
    }
}

fn call_error(e: ureq::Error) -> AssessError {
    match e {
        ureq::Error::Status(code, _) => AssessError::Malformed(format!("HTTP status {code}")),
        ureq::Error::Transport(t) => transport_error(t),
    }
}

impl RemoteAssessor {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        RemoteAssessor { agent, base: base_url.trim_end_matches('/').to_owned() }
    }

    pub fn health(&self) -> Result<(), AssessError> {
        self.agent.get(&format!("{}/healthz", self.base)).call().map_err(call_error)?;
        Ok(())
    }

    fn read_body(response: ureq::Response) -> Result<String, AssessError> {
        let mut body = String::new();
        response.into_reader().take(MAX_RESPONSE_BYTES).read_to_string(&mut body).map_err(|e| {
            if is_timeout(&e) {
                AssessError::Timeout(e.to_string())
            } else {
                AssessError::Malformed(e.to_string())
            }
        })?;
        Ok(body)
    }
}

impl Assessor for RemoteAssessor {
    fn assess(&self, request: &AssessmentRequest<'_>) -> Result<AssessmentResult, AssessError> {
        let response = self
            .agent
            .post(&format!("{}/assess", self.base))
            .set("Content-Type", "application/json")
            .send_string(&request_body(request))
            .map_err(call_error)?;
        if response.status() != 200 {
            return Err(AssessError::Malformed(format!("HTTP status {}", response.status())));
        }
        parse_response(&Self::read_body(response)?, request.candidates)
    }
}
