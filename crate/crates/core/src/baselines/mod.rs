//! Retrieval baselines that emit the same trace shape as the pipeline.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embed::Embedder;
use crate::error::{BaselineError, ProviderError};
use crate::pipeline::{rank, Scored, ScoredSymbol, SectionTrace, Status, ValidatedSymbol};
use crate::provider::Provider;
use crate::repo::structure::{generate_file_structure_doc, StructureCache};
use crate::repo::{is_ancestor, parent_folder, CodeSymbol, RepoModel};
use crate::spec_corpus::{semantic_chunk, SpecDocument};

pub mod bm25;
pub mod grep;
pub mod hybrid;

pub use grep::{grep_search, KeywordMatch};
pub use hybrid::{build_hybrid_index, hybrid_search, HybridHit, HybridIndex, HybridWeights};

pub const DEFAULT_GREP_K: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Grep,
    Hybrid,
}

impl BaselineMethod {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "grep" => Some(Self::Grep),
            "hybrid" | "bm25" => Some(Self::Hybrid),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Grep => "grep",
            Self::Hybrid => "hybrid",
        }
    }
}

/// Chunking knobs for turning section text into hybrid queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkConfig {
    pub window_sentences: usize,
    pub boundary_threshold: f64,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            window_sentences: crate::spec_corpus::DEFAULT_WINDOW_SENTENCES,
            boundary_threshold: crate::spec_corpus::DEFAULT_BOUNDARY_THRESHOLD,
        }
    }
}

fn finish_trace(
    section_id: &str,
    mut files: Vec<Scored>,
    mut symbols: Vec<ScoredSymbol>,
) -> SectionTrace {
    // nested hits collapse into the outermost folder so that no folder in
    // the trace is an ancestor of another
    let parents: BTreeSet<&str> = files.iter().map(|f| parent_folder(&f.path)).collect();
    let mut folders: BTreeMap<String, f64> = BTreeMap::new();
    for f in &files {
        let parent = parent_folder(&f.path);
        let top = parents
            .iter()
            .find(|p| is_ancestor(p, parent))
            .copied()
            .unwrap_or(parent);
        let e = folders.entry(top.to_string()).or_insert(f.score);
        *e = e.max(f.score);
    }
    let mut folders: Vec<Scored> = folders
        .into_iter()
        .map(|(path, score)| Scored { path, score })
        .collect();
    rank(&mut folders, |s| s.score, |s| s.path.clone());
    rank(&mut files, |s| s.score, |s| s.path.clone());
    rank(&mut symbols, |s| s.score, |s| s.symbol.id());
    let empty = symbols.is_empty();
    SectionTrace {
        section_id: section_id.to_string(),
        validated_symbols: symbols
            .iter()
            .map(|s| ValidatedSymbol {
                symbol: s.symbol.clone(),
                confidence: None,
            })
            .collect(),
        folders,
        files,
        symbols,
        status: Some(if empty {
            Status::NotImplemented
        } else {
            Status::Implemented
        }),
        confidence: None,
        gap_notes: String::new(),
        error: None,
    }
}

/// Grep results as a trace: matched files, their folders, and the symbols
/// whose line ranges overlap a match.
pub fn grep_to_trace(
    section_id: &str,
    matches: &[KeywordMatch],
    model: &RepoModel,
) -> SectionTrace {
    let mut file_scores: BTreeMap<String, f64> = BTreeMap::new();
    let mut sym_scores: HashMap<String, (CodeSymbol, f64)> = HashMap::new();
    for m in matches {
        *file_scores.entry(m.file.clone()).or_insert(0.0) += m.score;
        for s in model.symbols_of(&m.file) {
            if s.line_start <= m.line_end && m.line_start <= s.line_end {
                let e = sym_scores.entry(s.id()).or_insert((s.clone(), 0.0));
                e.1 = e.1.max(m.score);
            }
        }
    }
    finish_trace(
        section_id,
        file_scores
            .into_iter()
            .map(|(path, score)| Scored { path, score })
            .collect(),
        sym_scores
            .into_values()
            .map(|(symbol, score)| ScoredSymbol { symbol, score })
            .collect(),
    )
}

/// Hybrid hits as a trace: files and folders projected from hit symbols.
pub fn hybrid_to_trace(section_id: &str, hits: &[HybridHit]) -> SectionTrace {
    let mut file_scores: BTreeMap<String, f64> = BTreeMap::new();
    for h in hits {
        let e = file_scores.entry(h.symbol.file.clone()).or_insert(h.score);
        *e = e.max(h.score);
    }
    finish_trace(
        section_id,
        file_scores
            .into_iter()
            .map(|(path, score)| Scored { path, score })
            .collect(),
        hits.iter()
            .map(|h| ScoredSymbol {
                symbol: h.symbol.clone(),
                score: h.score,
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRun {
    pub traces: Vec<SectionTrace>,
    pub runtime_seconds: f64,
}

/// Grep with each section's query terms.
pub fn run_grep_baseline(spec: &SpecDocument, model: &RepoModel, k: usize) -> BaselineRun {
    let started = Instant::now();
    let traces = spec
        .sections
        .iter()
        .map(|s| grep_to_trace(&s.id, &grep_search(model, &s.query_terms, k), model))
        .collect();
    BaselineRun {
        traces,
        runtime_seconds: started.elapsed().as_secs_f64(),
    }
}

/// Structure-doc descriptions for every symbol, generating file docs as needed.
pub fn symbol_descriptions(
    model: &RepoModel,
    provider: &Provider,
    cache: &StructureCache,
) -> Result<BTreeMap<String, String>, ProviderError> {
    let mut out = BTreeMap::new();
    for file in model.symbol_by_file.keys() {
        let doc = generate_file_structure_doc(file, model, provider, cache)?;
        for e in doc.entries {
            out.insert(e.target, e.description);
        }
    }
    Ok(out)
}

/// Hybrid search per section: the section text is chunked, each chunk is
/// searched, and the best score per symbol is kept across chunks before
/// the final cut to `final_k`.
pub fn run_hybrid_baseline(
    spec: &SpecDocument,
    index: &HybridIndex,
    embedder: &dyn Embedder,
    weights: &HybridWeights,
    chunking: &ChunkConfig,
) -> Result<BaselineRun, BaselineError> {
    let started = Instant::now();
    let mut traces = Vec::with_capacity(spec.sections.len());
    for section in &spec.sections {
        let text = section.full_text();
        let chunks = semantic_chunk(
            &text,
            embedder,
            chunking.window_sentences,
            chunking.boundary_threshold,
        )?;
        let mut best: HashMap<String, HybridHit> = HashMap::new();
        for chunk in chunks.iter().filter(|c| c.embedding.is_some()) {
            for hit in hybrid_search(chunk, index, weights)? {
                let id = hit.symbol.id();
                match best.get(&id) {
                    Some(prev) if prev.score >= hit.score => {}
                    _ => {
                        best.insert(id, hit);
                    }
                }
            }
        }
        let mut hits: Vec<HybridHit> = best.into_values().collect();
        rank(&mut hits, |h| h.score, |h| h.symbol.id());
        hits.truncate(weights.final_k);
        traces.push(hybrid_to_trace(&section.id, &hits));
    }
    Ok(BaselineRun {
        traces,
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}
