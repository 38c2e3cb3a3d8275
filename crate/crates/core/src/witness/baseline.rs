use std::collections::{BTreeMap, BTreeSet};

use super::{canonicalize, AssessError, AssessmentRequest, AssessmentResult, Assessor, Candidate};
use crate::config::Config;
use crate::text::{tokenize, Token};

/// Deterministic lexicon assessor.
///
/// A hit is an occurrence of one of the attribution's signal phrases that has
/// no negation cue among the `negation_window` tokens before it in the same
/// sentence. Its answer is the nearest run of capitalized tokens before the
/// phrase in that sentence, else the first one after it. Hits are grouped by
/// the participant they canonicalize to; the largest group wins (ties to the
/// smallest id) and `h` hits give confidence `1 - 0.4 * 0.5^(h-1)`.
#[derive(Clone, Debug)]
pub struct LexiconAssessor {
    signals: BTreeMap<String, Vec<Vec<String>>>,
    negation_window: usize,
    cues: BTreeSet<String>,
    canonicalization_threshold: f64,
}

struct Hit {
    phrase: String,
    target: Option<String>,
    similarity: f64,
}

fn confidence(hits: usize) -> f64 {
    if hits == 0 {
        0.0
    } else {
        1.0 - 0.4 * 0.5f64.powi(hits as i32 - 1)
    }
}

fn capitalized(t: &Token<'_>) -> bool {
    t.text.chars().next().is_some_and(char::is_uppercase)
}

impl LexiconAssessor {
    pub fn new<I, S>(lexicon: &BTreeMap<String, Vec<String>>, negation_window: usize, cues: I, threshold: f64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let signals = lexicon
            .iter()
            .map(|(name, phrases)| {
                let toks = phrases
                    .iter()
                    .map(|p| tokenize(p).iter().map(|t| t.text.to_lowercase()).collect::<Vec<_>>())
                    .filter(|p| !p.is_empty())
                    .collect();
                (name.clone(), toks)
            })
            .collect();
        LexiconAssessor {
            signals,
            negation_window,
            cues: cues.into_iter().map(|c| c.as_ref().to_lowercase()).collect(),
            canonicalization_threshold: threshold,
        }
    }

    pub fn from_config(cfg: &Config) -> Self {
        let a = &cfg.assessment;
        Self::new(&cfg.lexicon, a.negation_window, &a.negation_cues, a.canonicalization_threshold)
    }

    fn hits(&self, signals: &[Vec<String>], text: &str, candidates: &[Candidate]) -> Vec<Hit> {
        let tokens = tokenize(text);
        let lower: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
        let mut sentence = Vec::with_capacity(tokens.len());
        let mut s = 0;
        for t in &tokens {
            sentence.push(s);
            if t.sentence_end {
                s += 1;
            }
        }
        let matches_at = |i: usize, p: &[String]| {
            i + p.len() <= tokens.len()
                && p.iter().enumerate().all(|(j, w)| lower[i + j] == *w && sentence[i + j] == sentence[i])
        };

        let mut hits = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let Some(len) = signals.iter().filter(|p| matches_at(i, p)).map(Vec::len).max() else {
                i += 1;
                continue;
            };
            let from = i.saturating_sub(self.negation_window);
            let negated = (from..i).any(|j| sentence[j] == sentence[i] && self.cues.contains(&lower[j]));
            if !negated {
                if let Some(run) = answer_run(&tokens, &sentence, i, len) {
                    hits.push(self.resolve(&tokens[run.0..run.1], text, candidates));
                }
            }
            i += len;
        }
        hits
    }

    /// Canonicalizes the best contiguous sub-run, so "Yesterday Russia" resolves like "Russia".
    fn resolve(&self, run: &[Token<'_>], text: &str, candidates: &[Candidate]) -> Hit {
        let whole = &text[run[0].start..run[run.len() - 1].end];
        let mut best = Hit { phrase: whole.to_owned(), target: None, similarity: 0.0 };
        for a in 0..run.len() {
            for b in a..run.len() {
                let phrase = &text[run[a].start..run[b].end];
                let (target, sim) = canonicalize(phrase, candidates, self.canonicalization_threshold);
                if sim > best.similarity {
                    best = Hit { phrase: phrase.to_owned(), target, similarity: sim };
                }
            }
        }
        if best.target.is_none() {
            best.phrase = whole.to_owned();
        }
        best
    }
}

/// Token range of the capitalized run nearest before `start`, else first after the signal.
fn answer_run(tokens: &[Token<'_>], sentence: &[usize], start: usize, len: usize) -> Option<(usize, usize)> {
    let sid = sentence[start];
    let before = (0..start).rev().take_while(|&j| sentence[j] == sid).find(|&j| capitalized(&tokens[j]));
    if let Some(end) = before {
        let mut first = end;
        while first > 0 && sentence[first - 1] == sid && capitalized(&tokens[first - 1]) {
            first -= 1;
        }
        return Some((first, end + 1));
    }
    let after = (start + len..tokens.len()).take_while(|&j| sentence[j] == sid).find(|&j| capitalized(&tokens[j]))?;
    let mut last = after;
    while last + 1 < tokens.len() && sentence[last + 1] == sid && capitalized(&tokens[last + 1]) {
        last += 1;
    }
    Some((after, last + 1))
}

impl Assessor for LexiconAssessor {
    fn assess(&self, request: &AssessmentRequest<'_>) -> Result<AssessmentResult, AssessError> {
        let Some(signals) = self.signals.get(request.attribution) else {
            return Ok(AssessmentResult::empty());
        };
        let text = request.document.context();
        let hits = self.hits(signals, &text, request.candidates);
        if hits.is_empty() {
            return Ok(AssessmentResult::empty());
        }
        let mut groups: BTreeMap<&str, Vec<&Hit>> = BTreeMap::new();
        for h in &hits {
            if let Some(t) = &h.target {
                groups.entry(t).or_default().push(h);
            }
        }
        let mut best: Option<(&str, &Vec<&Hit>)> = None;
        for (t, g) in &groups {
            if best.is_none_or(|(_, b)| g.len() > b.len()) {
                best = Some((t, g));
            }
        }
        Ok(match best {
            Some((target, group)) => AssessmentResult {
                answer_phrase: group[0].phrase.clone(),
                confidence: confidence(group.len()),
                canonical_target: Some(target.to_owned()),
                similarity: group.iter().map(|h| h.similarity).fold(0.0, f64::max),
            },
            None => AssessmentResult {
                answer_phrase: hits[0].phrase.clone(),
                confidence: confidence(hits.len()),
                canonical_target: None,
                similarity: hits.iter().map(|h| h.similarity).fold(0.0, f64::max),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::corpus::Document;
    use crate::witness::WitnessQuery;

    fn assessor() -> LexiconAssessor {
        LexiconAssessor::from_config(&Config::default())
    }

    fn doc(body: &str) -> Document {
        Document {
            doc_id: "d".into(),
            collection: "c".into(),
            outlet: "o".into(),
            viewpoints: BTreeSet::from(["US".to_string()]),
            date: None,
            headline: "News".into(),
            body: body.into(),
        }
    }

    fn candidates() -> Vec<Candidate> {
        vec![
            Candidate { id: "Russia".into(), aliases: vec!["Russia".into(), "Moscow".into(), "Kremlin".into()] },
            Candidate { id: "Ukraine".into(), aliases: vec!["Ukraine".into(), "Kyiv".into()] },
        ]
    }

    fn run(body: &str) -> AssessmentResult {
        let c = candidates();
        let q = WitnessQuery::new("is_aggressor", "Who was an aggressor in RUC22", &c, None).unwrap();
        let d = doc(body);
        assessor().assess(&q.request(&d)).unwrap()
    }

    #[test]
    fn offensive_names_russia() {
        let r = run("Russia launched an offensive against its neighbour.");
        assert_eq!(r.answer_phrase, "Russia");
        assert_eq!(r.canonical_target.as_deref(), Some("Russia"));
        assert_eq!(r.confidence, 0.6);
        assert_eq!(r.similarity, 1.0);
    }

    #[test]
    fn no_hit_is_empty() {
        assert_eq!(run("Talks continued in Geneva."), AssessmentResult::empty());
    }

    #[test]
    fn negation_window_suppresses() {
        let r = run("Claims that Ukraine was an aggressor were lies.");
        assert_eq!(r.confidence, 0.0);
        assert_eq!(r.canonical_target, None);
        // a cue in an earlier sentence does not reach
        let r = run("That is not news. Russia invaded.");
        assert_eq!(r.canonical_target.as_deref(), Some("Russia"));
        // nor does one more than eight tokens back
        let r = run("Never mind the long and winding preamble here, friends: Moscow attacked.");
        assert_eq!(r.canonical_target.as_deref(), Some("Russia"));
    }

    #[test]
    fn repeated_hits_raise_confidence() {
        let r = run("Russia invaded. The Kremlin attacked again. Kyiv was attacked by Moscow.");
        // hits: Russia, Kremlin, Kyiv (nearest before "attacked"); Russia wins 2 to 1
        assert_eq!(r.canonical_target.as_deref(), Some("Russia"));
        assert_eq!(r.confidence, 0.8);
    }

    #[test]
    fn answer_after_signal_when_none_before() {
        let r = run("an unprovoked attack by Russian Federation troops");
        assert_eq!(r.canonical_target.as_deref(), Some("Russia"));
    }

    #[test]
    fn unresolvable_answer_keeps_phrase() {
        let r = run("Martians invaded.");
        assert_eq!(r.answer_phrase, "Martians");
        assert_eq!(r.canonical_target, None);
        assert_eq!(r.confidence, 0.6);
    }

    #[test]
    fn unknown_attribution_is_empty() {
        let c = candidates();
        let q = WitnessQuery::new("is_hero", "q", &c, None).unwrap();
        let d = doc("Russia invaded.");
        assert_eq!(assessor().assess(&q.request(&d)).unwrap(), AssessmentResult::empty());
    }

    #[test]
    fn deterministic() {
        let body = "Moscow attacked. Ukraine invaded? Russia invaded.";
        assert_eq!(run(body), run(body));
    }
}
