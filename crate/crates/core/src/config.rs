//! Declarative run configuration, read from TOML.
//!
//! Every key has a default, so an empty file is a valid configuration.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::IngestOptions;
use crate::index::{BuildOptions, DEFAULT_SEED};
use crate::witness::{QuestionTemplate, ThresholdPolicy, EVENT_MASK};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("config value `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorPolicy {
    /// Treat a document whose assessment failed as a non-witness and count it.
    #[default]
    SkipDocument,
    FailQuery,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AssessorKind {
    #[default]
    Baseline,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssessmentConfig {
    pub assessor: AssessorKind,
    pub confidence_threshold: f64,
    pub min_witnesses: usize,
    pub canonicalization_threshold: f64,
    /// Tokens before a signal phrase searched for negation cues.
    pub negation_window: usize,
    pub negation_cues: Vec<String>,
    pub error_policy: ErrorPolicy,
    /// Witness lists in results are cut to this length. The truth value is not.
    pub top_k: Option<usize>,
}

impl Default for AssessmentConfig {
    fn default() -> Self {
        AssessmentConfig {
            assessor: AssessorKind::Baseline,
            confidence_threshold: 0.5,
            min_witnesses: 1,
            canonicalization_threshold: 0.5,
            negation_window: 8,
            negation_cues: [
                "not",
                "no",
                "never",
                "denied",
                "denies",
                "deny",
                "claims",
                "claimed",
                "alleged",
                "allegedly",
                "lies",
                "lie",
                "false",
                "falsely",
                "refuted",
                "rejected",
                "rejects",
                "nor",
                "without",
            ]
            .map(String::from)
            .to_vec(),
            error_policy: ErrorPolicy::SkipDocument,
            top_k: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    pub url: String,
    pub timeout_ms: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig { url: "http://127.0.0.1:8088".into(), timeout_ms: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Worker threads for per-event document assessment.
    pub parallelism: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { parallelism: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexConfig {
    pub target_fpr: f64,
    pub capacity_hint: Option<u64>,
    pub seed: u64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig { target_fpr: 0.01, capacity_hint: None, seed: DEFAULT_SEED }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub dedup_headline_similarity: Option<f64>,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub assessment: AssessmentConfig,
    pub remote: RemoteConfig,
    pub engine: EngineConfig,
    pub index: IndexConfig,
    pub ingest: IngestConfig,
    /// Signal phrases per subjective attribution, for the baseline assessor.
    pub lexicon: BTreeMap<String, Vec<String>>,
    /// Question templates per subjective attribution, each with one event mask.
    pub templates: BTreeMap<String, String>,
    /// Outlet name to viewpoint ids, used when a corpus record has no viewpoints.
    pub outlets: BTreeMap<String, Vec<String>>,
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl Default for Config {
    fn default() -> Self {
        let lexicon = BTreeMap::from([
            (
                "is_aggressor".to_string(),
                strings(&[
                    "launched an offensive",
                    "launched an invasion",
                    "launched a full assault",
                    "invaded",
                    "attacked",
                    "was the aggressor",
                    "was an aggressor",
                    "unprovoked attack",
                    "act of aggression",
                    "aggression by",
                ]),
            ),
            (
                "is_threat".to_string(),
                strings(&["threatens", "threatened", "poses a threat", "is a threat", "menace to", "danger to"]),
            ),
            (
                "is_enemy".to_string(),
                strings(&["is an enemy", "was an enemy", "enemy of", "hostile to", "adversary of", "sworn enemy"]),
            ),
            (
                "is_war_criminal".to_string(),
                strings(&["war crimes", "war crime", "war criminal", "atrocities", "massacred civilians"]),
            ),
            ("was_illegal".to_string(), strings(&["illegal war", "illegal invasion", "violated international law"])),
        ]);
        let templates = BTreeMap::from([
            ("is_aggressor".to_string(), format!("Who was an aggressor in {EVENT_MASK}")),
            ("is_threat".to_string(), format!("Who was a threat in {EVENT_MASK}")),
            ("is_enemy".to_string(), format!("Who was an enemy in {EVENT_MASK}")),
            ("is_war_criminal".to_string(), format!("Who committed war crimes in {EVENT_MASK}")),
            ("was_illegal".to_string(), format!("Was {EVENT_MASK} illegal")),
        ]);
        let outlets = BTreeMap::from([
            ("New York Times".to_string(), strings(&["US"])),
            ("Washington Post".to_string(), strings(&["US"])),
            ("Daily Mail".to_string(), strings(&["UK"])),
            ("The Guardian".to_string(), strings(&["UK"])),
            ("RT".to_string(), strings(&["RU"])),
            ("Sputnik".to_string(), strings(&["RU"])),
        ]);
        Config {
            assessment: AssessmentConfig::default(),
            remote: RemoteConfig::default(),
            engine: EngineConfig::default(),
            index: IndexConfig::default(),
            ingest: IngestConfig::default(),
            lexicon,
            templates,
            outlets,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let a = &self.assessment;
        let unit = |key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(key, format!("must lie in [0, 1], got {v}")))
            }
        };
        unit("assessment.confidence_threshold", a.confidence_threshold)?;
        unit("assessment.canonicalization_threshold", a.canonicalization_threshold)?;
        if a.min_witnesses < 1 {
            return Err(invalid("assessment.min_witnesses", "must be at least 1"));
        }
        if a.top_k == Some(0) {
            return Err(invalid("assessment.top_k", "must be at least 1 when set"));
        }
        if self.engine.parallelism < 1 {
            return Err(invalid("engine.parallelism", "must be at least 1"));
        }
        let p = self.index.target_fpr;
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid("index.target_fpr", format!("must lie in (0, 1), got {p}")));
        }
        if let Some(s) = self.ingest.dedup_headline_similarity {
            unit("ingest.dedup_headline_similarity", s)?;
        }
        if let (Some(from), Some(to)) = (self.ingest.date_from, self.ingest.date_to) {
            if from > to {
                return Err(invalid("ingest.date_from", "after ingest.date_to"));
            }
        }
        if self.remote.timeout_ms == 0 {
            return Err(invalid("remote.timeout_ms", "must be positive"));
        }
        for (name, t) in &self.templates {
            QuestionTemplate::new(t).map_err(|e| invalid(format!("templates.{name}"), e.to_string()))?;
        }
        for (name, phrases) in &self.lexicon {
            if phrases.iter().any(|p| p.split_whitespace().next().is_none()) {
                return Err(invalid(format!("lexicon.{name}"), "empty signal phrase"));
            }
        }
        Ok(())
    }

    pub fn threshold_policy(&self) -> ThresholdPolicy {
        ThresholdPolicy {
            confidence: self.assessment.confidence_threshold,
            min_witnesses: self.assessment.min_witnesses,
            top_k: self.assessment.top_k,
        }
    }

    /// Template for `attribution`; falls back to a phrase built from its name.
    pub fn template(&self, attribution: &str) -> QuestionTemplate {
        self.templates.get(attribution).and_then(|t| QuestionTemplate::new(t).ok()).unwrap_or_else(|| {
            let words = attribution.strip_prefix("is_").unwrap_or(attribution).replace('_', " ");
            QuestionTemplate::new(&format!("Who was {words} in {EVENT_MASK}")).expect("one mask")
        })
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            target_fpr: self.index.target_fpr,
            capacity_hint: self.index.capacity_hint,
            seed: self.index.seed,
            fingerprint: self.assessment_fingerprint(),
        }
    }

    /// Hash of every setting that changes which assessments count as positive.
    /// An index records it so that stale indexes can be detected.
    pub fn assessment_fingerprint(&self) -> u64 {
        let a = &self.assessment;
        let v = serde_json::json!({
            "assessor": a.assessor,
            "confidence_threshold": a.confidence_threshold,
            "canonicalization_threshold": a.canonicalization_threshold,
            "negation_window": a.negation_window,
            "negation_cues": a.negation_cues,
            "lexicon": self.lexicon,
            "templates": self.templates,
            "remote_url": self.remote.url,
        });
        xxhash_rust::xxh3::xxh3_64(v.to_string().as_bytes())
    }

    pub fn ingest_options(&self, known_viewpoints: Option<BTreeSet<String>>) -> IngestOptions {
        let date_window = match (self.ingest.date_from, self.ingest.date_to) {
            (None, None) => None,
            (from, to) => Some((from.unwrap_or(NaiveDate::MIN), to.unwrap_or(NaiveDate::MAX))),
        };
        IngestOptions {
            outlet_viewpoints: self.outlets.clone(),
            known_viewpoints,
            dedup_headline_similarity: self.ingest.dedup_headline_similarity,
            date_window,
        }
    }
}
