//! Shared lexical helpers: code-aware tokenization, stopwords, set overlap
//! and FNV-1a content fingerprints.

use std::collections::BTreeSet;
use std::hash::Hasher;

use fnv::FnvHasher;

/// Fixed English stopword list used for query-term extraction.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "either",
    "else", "etc", "few", "for", "from", "further", "had", "has", "have", "having", "he", "her",
    "here", "hers", "him", "his", "how", "however", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "may", "me", "might", "more", "most", "much", "must", "my", "no", "nor",
    "not", "now", "of", "off", "on", "once", "one", "only", "or", "other", "our", "out", "over",
    "own", "same", "shall", "she", "should", "so", "some", "such", "than", "that", "the", "their",
    "them", "then", "there", "these", "they", "this", "those", "through", "thus", "to", "too",
    "under", "until", "up", "upon", "use", "used", "uses", "using", "very", "via", "was", "we",
    "were", "what", "when", "where", "whether", "which", "while", "who", "whom", "why", "will",
    "with", "within", "without", "would", "you", "your",
];

pub fn is_stopword(word: &str) -> bool {
    let lower = word.to_ascii_lowercase();
    STOPWORDS.binary_search(&lower.as_str()).is_ok()
}

/// Lowercased tokens split on non-alphanumerics. Identifiers containing
/// underscores are kept joined and also emitted part by part, so
/// `nfcService_Init` yields `nfcservice_init`, `nfcservice`, `init`.
pub fn tokenize_code(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !(c.is_alphanumeric() || c == '_')) {
        let word = word.trim_matches('_');
        if word.is_empty() {
            continue;
        }
        let lower = word.to_lowercase();
        if lower.contains('_') {
            out.push(lower.clone());
            out.extend(
                lower
                    .split('_')
                    .filter(|p| !p.is_empty())
                    .map(str::to_string),
            );
        } else {
            out.push(lower);
        }
    }
    out
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokenize_code(text).into_iter().collect()
}

/// Token set with stopwords removed; the vocabulary used for lexical relevance.
pub fn content_tokens(text: &str) -> BTreeSet<String> {
    tokenize_code(text)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Order-sensitive pairwise combination of fingerprints.
pub fn combine_fingerprints(acc: u64, next: u64) -> u64 {
    let mut h = FnvHasher::with_key(acc);
    h.write(&next.to_le_bytes());
    h.finish()
}

/// Rough tokenizer-free estimate: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// Collapses whitespace runs so a description fits on one line.
pub fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
