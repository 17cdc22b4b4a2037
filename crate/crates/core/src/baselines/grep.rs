//! Keyword search over raw source text, the way a developer would grep.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::repo::RepoModel;
use crate::text::tokenize_code;

/// Hits closer than this many lines are merged into one range.
pub const MERGE_GAP: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordMatch {
    pub file: String,
    pub line_start: usize,
    pub line_end: usize,
    pub snippet: String,
    pub score: f64,
}

/// A search term reduced to its lowercase tokens; it matches a line when
/// every token occurs there as a whole token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Term(Vec<String>);

fn prepare_terms(terms: &[String]) -> Vec<Term> {
    let set: BTreeSet<Term> = terms
        .iter()
        .map(|t| {
            // a hyphenated or multi-word term must match all its parts; the
            // joined snake_case form is enough for identifiers
            let toks = tokenize_code(t);
            let head = toks.first().cloned();
            match head {
                Some(h) if h.contains('_') => Term(vec![h]),
                _ => Term(toks),
            }
        })
        .filter(|t| !t.0.is_empty())
        .collect();
    set.into_iter().collect()
}

fn occurrences(term: &Term, line_counts: &HashMap<&str, usize>) -> usize {
    term.0
        .iter()
        .map(|t| line_counts.get(t.as_str()).copied().unwrap_or(0))
        .min()
        .unwrap_or(0)
}

struct FileHits {
    file: String,
    lines: Vec<String>,
    /// (line number, per-term occurrence counts) for lines with any hit.
    hits: Vec<(usize, Vec<usize>)>,
}

fn scan_file(model: &RepoModel, file: &str, terms: &[Term]) -> Option<FileHits> {
    let text = match model.read_source(file) {
        Ok(t) => t,
        Err(e) => {
            tracing::warn!(file, error = %e, "grep: unreadable file skipped");
            return None;
        }
    };
    let lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut hits = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let toks = tokenize_code(line);
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in &toks {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        let per_term: Vec<usize> = terms.iter().map(|t| occurrences(t, &counts)).collect();
        if per_term.iter().any(|&c| c > 0) {
            hits.push((i + 1, per_term));
        }
    }
    Some(FileHits {
        file: file.to_string(),
        lines,
        hits,
    })
}

fn idf_weights(model: &RepoModel, scanned: &[FileHits], n_terms: usize) -> Vec<f64> {
    let total = model.files.len().max(1) as f64;
    (0..n_terms)
        .map(|ti| {
            let df = scanned
                .iter()
                .filter(|f| f.hits.iter().any(|(_, c)| c[ti] > 0))
                .count();
            if df == 0 {
                0.0
            } else {
                (total / df as f64).ln()
            }
        })
        .collect()
}

fn ranges_of(f: &FileHits, idf: &[f64]) -> Vec<KeywordMatch> {
    let mut out: Vec<KeywordMatch> = Vec::new();
    let mut cur: Option<(usize, usize, f64)> = None;
    for (line, counts) in &f.hits {
        let s: f64 = counts.iter().zip(idf).map(|(&c, w)| c as f64 * w).sum();
        cur = match cur {
            Some((a, b, acc)) if line - b <= MERGE_GAP => Some((a, *line, acc + s)),
            Some(done) => {
                out.push(make_match(f, done));
                Some((*line, *line, s))
            }
            None => Some((*line, *line, s)),
        };
    }
    if let Some(done) = cur {
        out.push(make_match(f, done));
    }
    out
}

fn make_match(f: &FileHits, (a, b, score): (usize, usize, f64)) -> KeywordMatch {
    KeywordMatch {
        file: f.file.clone(),
        line_start: a,
        line_end: b,
        snippet: f.lines[a - 1..b].join("\n"),
        score,
    }
}

fn all_matches(model: &RepoModel, terms: &[String]) -> Vec<KeywordMatch> {
    let terms = prepare_terms(terms);
    if terms.is_empty() {
        return Vec::new();
    }
    let files: Vec<&String> = model.files.keys().collect();
    let scanned: Vec<FileHits> = files
        .par_iter()
        .filter_map(|f| scan_file(model, f, &terms))
        .collect();
    let idf = idf_weights(model, &scanned, terms.len());
    scanned.iter().flat_map(|f| ranges_of(f, &idf)).collect()
}

/// Case-insensitive whole-token search. Ranges are scored by summing, over
/// every term occurrence, ln(total files / files containing the term); the
/// top `k` come back ordered by score, then path, then line.
pub fn grep_search(model: &RepoModel, terms: &[String], k: usize) -> Vec<KeywordMatch> {
    let mut matches = all_matches(model, terms);
    matches.retain(|m| m.score > 0.0);
    matches.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.file.cmp(&b.file))
            .then_with(|| a.line_start.cmp(&b.line_start))
    });
    matches.truncate(k);
    matches
}

/// Total score of each file over all its ranges.
pub fn grep_file_scores(model: &RepoModel, terms: &[String]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for m in all_matches(model, terms) {
        *out.entry(m.file).or_insert(0.0) += m.score;
    }
    out
}
