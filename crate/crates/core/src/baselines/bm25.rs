//! Okapi BM25 over per-symbol documents.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::text::{is_stopword, tokenize_code};

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocStats {
    pub tf: BTreeMap<String, u32>,
    pub len: usize,
}

impl DocStats {
    pub fn from_text(text: &str) -> Self {
        let toks = tokenize_code(text);
        let mut tf = BTreeMap::new();
        for t in &toks {
            *tf.entry(t.clone()).or_insert(0) += 1;
        }
        Self {
            tf,
            len: toks.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    pub docs: Vec<DocStats>,
    pub df: BTreeMap<String, usize>,
    pub avg_len: f64,
}

impl Bm25Index {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let docs: Vec<DocStats> = texts.into_iter().map(DocStats::from_text).collect();
        let mut df = BTreeMap::new();
        for d in &docs {
            for t in d.tf.keys() {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        let avg_len = if docs.is_empty() {
            0.0
        } else {
            docs.iter().map(|d| d.len).sum::<usize>() as f64 / docs.len() as f64
        };
        Self { docs, df, avg_len }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }
}

/// Deduplicated, stopword-free query tokens in first-seen order.
pub fn query_tokens<S: AsRef<str>>(terms: &[S]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    terms
        .iter()
        .flat_map(|t| tokenize_code(t.as_ref()))
        .filter(|t| !is_stopword(t))
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// BM25 of document `doc` for already-tokenized query terms.
pub fn bm25_score(query: &[String], doc: usize, index: &Bm25Index, k1: f64, b: f64) -> f64 {
    let d = &index.docs[doc];
    let norm = if index.avg_len > 0.0 {
        d.len as f64 / index.avg_len
    } else {
        0.0
    };
    query
        .iter()
        .map(|t| {
            let tf = d.tf.get(t).copied().unwrap_or(0) as f64;
            if tf == 0.0 {
                return 0.0;
            }
            index.idf(t) * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm))
        })
        .sum()
}
