//! Hierarchical mapping: folders → files → symbols → validation.
//!
//! Stages 1–3 run per section on a bounded worker pool; validation runs
//! strictly in section order so each section sees the previous verdicts.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, ProviderError};
use crate::provider::judge::{
    judge_with_mode, validate_symbols, Candidate, ContextEntry, JudgeMode,
};
use crate::provider::{LedgerSnapshot, Phase, Provider};
use crate::repo::structure::{
    generate_file_structure_doc, generate_folder_structure_doc, generate_repo_structure_doc,
    StructureCache, StructureDoc,
};
use crate::repo::{is_ancestor, parent_folder, CodeSymbol, RepoModel};
use crate::spec_corpus::{SpecDocument, SpecSection};
use crate::text::estimate_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "Implemented")]
    Implemented,
    #[serde(rename = "Partially_Implemented")]
    PartiallyImplemented,
    #[serde(rename = "Not_Implemented")]
    NotImplemented,
    #[serde(rename = "Not_Applicable")]
    NotApplicable,
}

impl Status {
    pub const ALL: [Status; 4] = [
        Status::Implemented,
        Status::PartiallyImplemented,
        Status::NotImplemented,
        Status::NotApplicable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Implemented => "Implemented",
            Status::PartiallyImplemented => "Partially_Implemented",
            Status::NotImplemented => "Not_Implemented",
            Status::NotApplicable => "Not_Applicable",
        }
    }

    /// Accepts the canonical names plus case and separator variants a model
    /// might produce ("partially implemented", "NOT-APPLICABLE").
    pub fn parse_loose(s: &str) -> Option<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match norm.as_str() {
            "implemented" | "fullyimplemented" => Some(Status::Implemented),
            "partiallyimplemented" | "partial" => Some(Status::PartiallyImplemented),
            "notimplemented" | "missing" => Some(Status::NotImplemented),
            "notapplicable" | "na" => Some(Status::NotApplicable),
            _ => None,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    /// Estimated-token budget of one folder-discovery judgment.
    pub folder_chunk_budget: u64,
    pub refinement_max_folders: usize,
    pub max_files_per_section: usize,
    pub context_window_sections: usize,
    /// Worker threads for stages 1–3.
    pub workers: usize,
    /// Offer prototypes (declarations without a body) as mapping candidates.
    pub include_declarations: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            theta1: 0.5,
            theta2: 0.5,
            theta3: 0.5,
            folder_chunk_budget: 8000,
            refinement_max_folders: 6,
            max_files_per_section: 20,
            context_window_sections: 3,
            workers: 4,
            include_declarations: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        for (name, t) in [
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("theta3", self.theta3),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(PipelineError::Config(format!(
                    "{name} = {t} outside [0, 1]"
                )));
            }
        }
        for (name, n) in [
            ("folder_chunk_budget", self.folder_chunk_budget as usize),
            ("refinement_max_folders", self.refinement_max_folders),
            ("max_files_per_section", self.max_files_per_section),
            ("context_window_sections", self.context_window_sections),
            ("workers", self.workers),
        ] {
            if n == 0 {
                return Err(PipelineError::Config(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub path: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSymbol {
    pub symbol: CodeSymbol,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedSymbol {
    pub symbol: CodeSymbol,
    /// Provider-assigned confidence; absent for methods without one.
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionTrace {
    pub section_id: String,
    pub folders: Vec<Scored>,
    pub files: Vec<Scored>,
    pub symbols: Vec<ScoredSymbol>,
    pub validated_symbols: Vec<ValidatedSymbol>,
    /// `None` only for errored sections.
    pub status: Option<Status>,
    pub confidence: Option<f64>,
    pub gap_notes: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SectionTrace {
    pub fn empty(section_id: impl Into<String>) -> Self {
        Self {
            section_id: section_id.into(),
            folders: Vec::new(),
            files: Vec::new(),
            symbols: Vec::new(),
            validated_symbols: Vec::new(),
            status: None,
            confidence: None,
            gap_notes: String::new(),
            error: None,
        }
    }

    pub fn errored(section_id: impl Into<String>, error: impl Into<String>) -> Self {
        Self {
            error: Some(error.into()),
            ..Self::empty(section_id)
        }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    /// Structural containment: validated ⊆ symbols, symbol files ⊆ files,
    /// every file lies within a listed folder, and no listed folder is an
    /// ancestor of another.
    pub fn check_containment(&self) -> Result<(), String> {
        let symbol_ids: Vec<String> = self.symbols.iter().map(|s| s.symbol.id()).collect();
        for v in &self.validated_symbols {
            if !symbol_ids.contains(&v.symbol.id()) {
                return Err(format!("validated {} not among symbols", v.symbol.id()));
            }
        }
        for s in &self.symbols {
            if !self.files.iter().any(|f| f.path == s.symbol.file) {
                return Err(format!("symbol file {} not among files", s.symbol.file));
            }
        }
        for f in &self.files {
            let parent = parent_folder(&f.path);
            if !self
                .folders
                .iter()
                .any(|d| d.path == parent || is_ancestor(&d.path, parent))
            {
                return Err(format!("folder of {} not among folders", f.path));
            }
        }
        for a in &self.folders {
            if let Some(b) = self.folders.iter().find(|b| is_ancestor(&a.path, &b.path)) {
                return Err(format!("folder {} is an ancestor of {}", a.path, b.path));
            }
        }
        if self.validated_symbols.is_empty()
            && matches!(
                self.status,
                Some(Status::Implemented | Status::PartiallyImplemented)
            )
        {
            return Err("empty validated set with an implemented status".into());
        }
        Ok(())
    }
}

/// Score descending, then id ascending.
pub fn rank<T>(items: &mut [T], score: impl Fn(&T) -> f64, id: impl Fn(&T) -> String) {
    items.sort_by(|a, b| {
        score(b)
            .total_cmp(&score(a))
            .then_with(|| id(a).cmp(&id(b)))
    });
}

fn rank_scored(items: &mut [Scored]) {
    rank(items, |s| s.score, |s| s.path.clone());
}

/// Removes every path that is a proper ancestor of another returned path.
pub fn filter_parent_child(folders: &[Scored]) -> Vec<Scored> {
    folders
        .iter()
        .filter(|f| !folders.iter().any(|g| is_ancestor(&f.path, &g.path)))
        .cloned()
        .collect()
}

/// Splits candidates into consecutive groups whose estimated size stays
/// within `budget` tokens; an oversized single candidate gets its own group.
pub fn chunk_candidates(candidates: &[Candidate], budget: u64) -> Vec<&[Candidate]> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut used = 0;
    for (i, c) in candidates.iter().enumerate() {
        let cost = estimate_tokens(&c.id) + estimate_tokens(&c.description) + 4;
        if i > start && used + cost > budget {
            out.push(&candidates[start..i]);
            start = i;
            used = 0;
        }
        used += cost;
    }
    if start < candidates.len() {
        out.push(&candidates[start..]);
    }
    out
}

fn judge_chunked(
    provider: &Provider,
    phase: Phase,
    section: &SpecSection,
    candidates: &[Candidate],
    budget: u64,
) -> Result<Vec<(String, f64)>, ProviderError> {
    let mut out = Vec::new();
    for chunk in chunk_candidates(candidates, budget) {
        for j in judge_with_mode(provider, phase, section, chunk, JudgeMode::Score)? {
            out.push((j.candidate_id, j.score));
        }
    }
    Ok(out)
}

const ROOT_ID: &str = ".";

fn folder_id(path: &str) -> &str {
    if path.is_empty() {
        ROOT_ID
    } else {
        path
    }
}

fn folder_path(id: &str) -> String {
    if id == ROOT_ID {
        String::new()
    } else {
        id.to_string()
    }
}

/// Stage 1 (M1): folders whose description is relevant to the section.
pub fn discover_folders(
    section: &SpecSection,
    repo_doc: &StructureDoc,
    provider: &Provider,
    config: &PipelineConfig,
) -> Result<Vec<Scored>, ProviderError> {
    let candidates: Vec<Candidate> = repo_doc
        .entries
        .iter()
        .map(|e| Candidate::new(folder_id(&e.target), &e.description))
        .collect();
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let judged = judge_chunked(
        provider,
        Phase::FolderDiscovery,
        section,
        &candidates,
        config.folder_chunk_budget,
    )?;
    let kept: Vec<Scored> = judged
        .into_iter()
        .filter(|(_, s)| *s > config.theta1)
        .map(|(id, score)| Scored {
            path: folder_path(&id),
            score,
        })
        .collect();
    let mut folders = filter_parent_child(&kept);
    rank_scored(&mut folders);
    if folders.len() > config.refinement_max_folders {
        let refine: Vec<Candidate> = folders
            .iter()
            .map(|f| {
                Candidate::new(
                    folder_id(&f.path),
                    repo_doc.description_of(&f.path).unwrap_or_default(),
                )
            })
            .collect();
        let judged = judge_with_mode(
            provider,
            Phase::FolderDiscovery,
            section,
            &refine,
            JudgeMode::Select(config.refinement_max_folders),
        )?;
        folders = judged
            .into_iter()
            .map(|j| Scored {
                path: folder_path(&j.candidate_id),
                score: j.score,
            })
            .collect();
        rank_scored(&mut folders);
        folders.truncate(config.refinement_max_folders);
    }
    Ok(folders)
}

fn base_name(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

/// Stage 2 (M2): files directly inside the discovered folders.
pub fn discover_files(
    section: &SpecSection,
    folders: &[Scored],
    model: &RepoModel,
    provider: &Provider,
    cache: &StructureCache,
    config: &PipelineConfig,
) -> Result<Vec<Scored>, ProviderError> {
    let mut candidates = Vec::new();
    for folder in folders {
        let doc = generate_folder_structure_doc(&folder.path, model, provider, cache)?;
        for e in &doc.entries {
            candidates.push(Candidate::new(
                &e.target,
                format!("{}: {}", base_name(&e.target), e.description),
            ));
        }
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let judged = judge_chunked(
        provider,
        Phase::FileDiscovery,
        section,
        &candidates,
        config.folder_chunk_budget,
    )?;
    let mut files: Vec<Scored> = judged
        .into_iter()
        .filter(|(_, s)| *s > config.theta2)
        .map(|(path, score)| Scored { path, score })
        .collect();
    rank_scored(&mut files);
    files.truncate(config.max_files_per_section);
    Ok(files)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolHit {
    pub symbol: CodeSymbol,
    pub score: f64,
    pub description: String,
}

/// Stage 3 (M3): symbols of the discovered files, all six kinds.
pub fn discover_symbols(
    section: &SpecSection,
    files: &[Scored],
    model: &RepoModel,
    provider: &Provider,
    cache: &StructureCache,
    config: &PipelineConfig,
) -> Result<Vec<SymbolHit>, ProviderError> {
    let mut candidates = Vec::new();
    let mut by_id: HashMap<String, (&CodeSymbol, String)> = HashMap::new();
    for file in files {
        let doc = generate_file_structure_doc(&file.path, model, provider, cache)?;
        for sym in model.symbols_of(&file.path) {
            if sym.declaration && !config.include_declarations {
                continue;
            }
            let id = sym.id();
            let desc = doc.description_of(&id).unwrap_or_default().to_string();
            candidates.push(Candidate::new(
                &id,
                format!("{} ({}): {}", sym.name, sym.kind, desc),
            ));
            by_id.insert(id, (sym, desc));
        }
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let judged = judge_chunked(
        provider,
        Phase::SymbolDiscovery,
        section,
        &candidates,
        config.folder_chunk_budget,
    )?;
    let mut hits: Vec<SymbolHit> = judged
        .into_iter()
        .filter(|(_, s)| *s > config.theta3)
        .filter_map(|(id, score)| {
            let (sym, desc) = by_id.get(&id)?;
            Some(SymbolHit {
                symbol: (*sym).clone(),
                score,
                description: desc.clone(),
            })
        })
        .collect();
    rank(&mut hits, |h| h.score, |h| h.symbol.id());
    Ok(hits)
}

/// Rolling summary of the most recently validated sections.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationContext {
    window: usize,
    entries: VecDeque<ContextEntry>,
}

pub const CONTEXT_TOP_SYMBOLS: usize = 5;

impl ValidationContext {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            entries: VecDeque::new(),
        }
    }

    pub fn entries(&self) -> Vec<ContextEntry> {
        self.entries.iter().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, trace: &SectionTrace) {
        let Some(status) = trace.status else { return };
        self.entries.push_back(ContextEntry {
            section_id: trace.section_id.clone(),
            status,
            symbols: trace
                .validated_symbols
                .iter()
                .take(CONTEXT_TOP_SYMBOLS)
                .map(|v| v.symbol.name.clone())
                .collect(),
        });
        while self.entries.len() > self.window {
            self.entries.pop_front();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub validated: Vec<ValidatedSymbol>,
    pub status: Status,
    pub confidence: f64,
    pub gap_notes: String,
}

/// Stage 4 (M4): keep/drop per symbol plus a section status. The kept set
/// is a subset of `hits` by construction.
pub fn validate_mapping(
    section: &SpecSection,
    hits: &[SymbolHit],
    context: &ValidationContext,
    provider: &Provider,
) -> Result<Validation, ProviderError> {
    let candidates: Vec<Candidate> = hits
        .iter()
        .map(|h| {
            Candidate::new(
                h.symbol.id(),
                format!("{} ({}): {}", h.symbol.name, h.symbol.kind, h.description),
            )
        })
        .collect();
    let verdict = validate_symbols(provider, section, &candidates, &context.entries())?;
    let conf: HashMap<&str, f64> = verdict
        .kept
        .iter()
        .map(|(id, c)| (id.as_str(), *c))
        .collect();
    let validated = hits
        .iter()
        .filter_map(|h| {
            conf.get(h.symbol.id().as_str()).map(|&c| ValidatedSymbol {
                symbol: h.symbol.clone(),
                confidence: Some(c),
            })
        })
        .collect();
    Ok(Validation {
        validated,
        status: verdict.status,
        confidence: verdict.confidence,
        gap_notes: verdict.gap_notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub traces: Vec<SectionTrace>,
    pub runtime_seconds: f64,
    pub ledger: LedgerSnapshot,
}

type Discovery = Result<(Vec<Scored>, Vec<Scored>, Vec<SymbolHit>), ProviderError>;

fn discover_section(
    section: &SpecSection,
    repo_doc: &StructureDoc,
    model: &RepoModel,
    provider: &Provider,
    cache: &StructureCache,
    config: &PipelineConfig,
) -> Discovery {
    let folders = discover_folders(section, repo_doc, provider, config)?;
    let files = discover_files(section, &folders, model, provider, cache, config)?;
    let symbols = discover_symbols(section, &files, model, provider, cache, config)?;
    Ok((folders, files, symbols))
}

/// Runs all four stages over every section. Fails only when the repository
/// doc cannot be produced; other provider failures quarantine their section.
pub fn run_pipeline(
    spec: &SpecDocument,
    model: &RepoModel,
    provider: &Provider,
    cache: &StructureCache,
    config: &PipelineConfig,
) -> Result<PipelineRun, PipelineError> {
    config.validate()?;
    let started = Instant::now();
    let repo_doc =
        generate_repo_structure_doc(model, provider, cache).map_err(PipelineError::RepoDoc)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let discovered: Vec<Discovery> = pool.install(|| {
        spec.sections
            .par_iter()
            .map(|s| discover_section(s, &repo_doc, model, provider, cache, config))
            .collect()
    });

    let mut context = ValidationContext::new(config.context_window_sections);
    let mut traces = Vec::with_capacity(spec.sections.len());
    for (section, found) in spec.sections.iter().zip(discovered) {
        let trace = match found {
            Err(e) => {
                tracing::warn!(section = %section.id, error = %e, "section discovery failed");
                SectionTrace::errored(&section.id, e.to_string())
            }
            Ok((folders, files, hits)) => {
                match validate_mapping(section, &hits, &context, provider) {
                    Err(e) => {
                        tracing::warn!(section = %section.id, error = %e, "section validation failed");
                        SectionTrace::errored(&section.id, e.to_string())
                    }
                    Ok(v) => SectionTrace {
                        section_id: section.id.clone(),
                        folders,
                        files,
                        symbols: hits
                            .into_iter()
                            .map(|h| ScoredSymbol {
                                symbol: h.symbol,
                                score: h.score,
                            })
                            .collect(),
                        validated_symbols: v.validated,
                        status: Some(v.status),
                        confidence: Some(v.confidence),
                        gap_notes: v.gap_notes,
                        error: None,
                    },
                }
            }
        };
        context.push(&trace);
        traces.push(trace);
    }
    Ok(PipelineRun {
        traces,
        runtime_seconds: started.elapsed().as_secs_f64(),
        ledger: provider.ledger().snapshot(),
    })
}
