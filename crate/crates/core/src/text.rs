//! String utilities shared by corpus ingestion and witness assessment.

use std::collections::HashMap;

/// Character trigram counts of the lowercased string.
///
/// Strings shorter than three characters yield a single gram holding the whole
/// string, so two-letter ids like `US` still compare equal to themselves.
pub fn trigram_counts(s: &str) -> HashMap<String, u32> {
    let chars: Vec<char> = s.to_lowercase().chars().collect();
    let mut counts = HashMap::new();
    if chars.is_empty() {
        return counts;
    }
    if chars.len() < 3 {
        counts.insert(chars.iter().collect(), 1);
        return counts;
    }
    for w in chars.windows(3) {
        *counts.entry(w.iter().collect()).or_insert(0) += 1;
    }
    counts
}

/// Cosine similarity of trigram count vectors, in `[0, 1]`. Empty input scores 0.
pub fn trigram_cosine(a: &str, b: &str) -> f64 {
    let ca = trigram_counts(a);
    let cb = trigram_counts(b);
    if ca.is_empty() || cb.is_empty() {
        return 0.0;
    }
    let dot: u64 = ca.iter().filter_map(|(g, x)| cb.get(g).map(|y| u64::from(*x) * u64::from(*y))).sum();
    let norm =
        |c: &HashMap<String, u32>| c.values().map(|v| (u64::from(*v) * u64::from(*v)) as f64).sum::<f64>().sqrt();
    dot as f64 / (norm(&ca) * norm(&cb))
}

/// A word token with its byte span in the source string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
    /// True when the token ends a sentence (followed by `.`, `!` or `?`).
    pub sentence_end: bool,
}

/// Splits on anything that is not alphanumeric, an apostrophe or a hyphen.
pub fn tokenize(s: &str) -> Vec<Token<'_>> {
    let mut out: Vec<Token<'_>> = Vec::new();
    let mut start = None;
    let is_word = |c: char| c.is_alphanumeric() || c == '\'' || c == '-';
    for (i, c) in s.char_indices() {
        match (start, is_word(c)) {
            (None, true) => start = Some(i),
            (Some(st), false) => {
                out.push(Token { text: &s[st..i], start: st, end: i, sentence_end: false });
                start = None;
            }
            _ => {}
        }
        if matches!(c, '.' | '!' | '?' | '\n') {
            if let Some(last) = out.last_mut() {
                if start.is_none() {
                    last.sentence_end = true;
                }
            }
        }
    }
    if let Some(st) = start {
        out.push(Token { text: &s[st..], start: st, end: s.len(), sentence_end: true });
    }
    out
}
