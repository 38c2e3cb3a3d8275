//! Two-tier Bloom-filter index over witnessed subjective attributions.
//!
//! The coarse tier answers "was attribution `s` ever witnessed as true for
//! participant `e`, in any event and any viewpoint"; the fine tier adds the
//! viewpoint. A negative answer is definitive, so the query engine can skip
//! document assessment without changing results.

mod bloom;
mod codec;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bloom::{optimal_params, BloomFilter};
pub use codec::{deserialize_index, serialize_index, CodecError, INDEX_MAGIC, INDEX_VERSION};

pub const DEFAULT_SEED: u64 = 0x6e61_7272_6174_656b;
/// Filters are never sized for fewer elements than this.
pub const MIN_CAPACITY: u64 = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("target false-positive rate must lie in (0, 1), got {0}")]
    BadRate(String),
    #[error("unknown subjective attribution `{0}`")]
    UnknownAttribution(String),
    #[error("unknown viewpoint `{0}`")]
    UnknownViewpoint(String),
}

/// One witnessed positive: `attribution` held for `participant` under `viewpoint`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Positive {
    pub attribution: String,
    pub viewpoint: String,
    pub participant: String,
}

impl Positive {
    pub fn new(attribution: impl Into<String>, viewpoint: impl Into<String>, participant: impl Into<String>) -> Self {
        Positive { attribution: attribution.into(), viewpoint: viewpoint.into(), participant: participant.into() }
    }
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub target_fpr: f64,
    /// Lower bound on the capacity of every filter.
    pub capacity_hint: Option<u64>,
    pub seed: u64,
    /// Identifies the assessment settings the positives were collected under.
    pub fingerprint: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { target_fpr: 0.01, capacity_hint: None, seed: DEFAULT_SEED, fingerprint: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AttributionIndexSet {
    coarse: BTreeMap<String, BloomFilter>,
    fine: BTreeMap<(String, String), BloomFilter>,
    fingerprint: u64,
}

fn push_field(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u64).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

/// Length-prefixed `participant ‖ attribution`.
pub fn coarse_key(attribution: &str, participant: &str) -> Vec<u8> {
    let mut buf = Vec::with_capacity(16 + participant.len() + attribution.len());
    push_field(&mut buf, participant);
    push_field(&mut buf, attribution);
    buf
}

/// Length-prefixed `participant ‖ attribution ‖ viewpoint`.
pub fn fine_key(attribution: &str, viewpoint: &str, participant: &str) -> Vec<u8> {
    let mut buf = coarse_key(attribution, participant);
    push_field(&mut buf, viewpoint);
    buf
}

/// Builds both tiers.
///
/// Every attribution in `attributions` gets a coarse filter and one fine filter
/// per viewpoint, even when it has no positives; that is what marks it as
/// covered. Positives naming anything outside these sets are rejected.
pub fn build_index<I>(
    positives: I,
    attributions: &BTreeSet<String>,
    viewpoints: &BTreeSet<String>,
    opts: &BuildOptions,
) -> Result<AttributionIndexSet, IndexError>
where
    I: IntoIterator<Item = Positive>,
{
    if !(opts.target_fpr > 0.0 && opts.target_fpr < 1.0) {
        return Err(IndexError::BadRate(opts.target_fpr.to_string()));
    }
    let mut coarse_members: BTreeMap<&str, BTreeSet<String>> =
        attributions.iter().map(|a| (a.as_str(), BTreeSet::new())).collect();
    let mut fine_members: BTreeMap<(&str, &str), BTreeSet<String>> = BTreeMap::new();
    for a in attributions {
        for v in viewpoints {
            fine_members.insert((a.as_str(), v.as_str()), BTreeSet::new());
        }
    }
    for p in positives {
        let Some(a) = attributions.get(&p.attribution) else {
            return Err(IndexError::UnknownAttribution(p.attribution));
        };
        let Some(v) = viewpoints.get(&p.viewpoint) else {
            return Err(IndexError::UnknownViewpoint(p.viewpoint));
        };
        coarse_members.get_mut(a.as_str()).expect("pre-seeded").insert(p.participant.clone());
        fine_members.get_mut(&(a.as_str(), v.as_str())).expect("pre-seeded").insert(p.participant);
    }

    let hint = opts.capacity_hint.unwrap_or(0).max(MIN_CAPACITY);
    let mut index = AttributionIndexSet { fingerprint: opts.fingerprint, ..Default::default() };
    for (a, members) in coarse_members {
        let mut f = BloomFilter::with_rate(hint.max(members.len() as u64), opts.target_fpr, opts.seed);
        for m in &members {
            f.insert(&coarse_key(a, m));
        }
        index.coarse.insert(a.to_owned(), f);
    }
    for ((a, v), members) in fine_members {
        let mut f = BloomFilter::with_rate(hint.max(members.len() as u64), opts.target_fpr, opts.seed);
        for m in &members {
            f.insert(&fine_key(a, v, m));
        }
        index.fine.insert((a.to_owned(), v.to_owned()), f);
    }
    Ok(index)
}

impl AttributionIndexSet {
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn covers(&self, attribution: &str) -> bool {
        self.coarse.contains_key(attribution)
    }

    /// `false` means `attribution` was never witnessed for `participant`
    /// (under `viewpoint`, when given). Uncovered attributions and viewpoints
    /// answer `true`, since nothing can be ruled out for them.
    pub fn may_hold(&self, attribution: &str, participant: &str, viewpoint: Option<&str>) -> bool {
        let Some(coarse) = self.coarse.get(attribution) else {
            return true;
        };
        if !coarse.contains(&coarse_key(attribution, participant)) {
            return false;
        }
        match viewpoint {
            None => true,
            Some(v) => match self.fine.get(&(attribution.to_owned(), v.to_owned())) {
                Some(f) => f.contains(&fine_key(attribution, v, participant)),
                None => true,
            },
        }
    }

    pub fn coarse_filters(&self) -> impl Iterator<Item = (&str, &BloomFilter)> {
        self.coarse.iter().map(|(a, f)| (a.as_str(), f))
    }

    pub fn fine_filters(&self) -> impl Iterator<Item = (&str, &str, &BloomFilter)> {
        self.fine.iter().map(|((a, v), f)| (a.as_str(), v.as_str(), f))
    }

    pub fn filter_count(&self) -> usize {
        self.coarse.len() + self.fine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coarse.is_empty()
    }

    pub(crate) fn with_fingerprint(fingerprint: u64) -> Self {
        AttributionIndexSet { fingerprint, ..Default::default() }
    }

    pub(crate) fn insert_coarse(&mut self, attribution: String, f: BloomFilter) -> bool {
        self.coarse.insert(attribution, f).is_none()
    }

    pub(crate) fn insert_fine(&mut self, attribution: String, viewpoint: String, f: BloomFilter) -> bool {
        self.fine.insert((attribution, viewpoint), f).is_none()
    }
}
