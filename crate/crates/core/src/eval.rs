//! Accuracy, cost and drift metrics against curated ground truth, plus
//! method comparison tables and gap reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::pipeline::{SectionTrace, Status};
use crate::provider::oracle::is_normative;
use crate::provider::LedgerSnapshot;
use crate::repo::{is_ancestor, RepoModel, SymbolKind};
use crate::spec_corpus::{sentence_spans, SpecDocument};
use crate::text::{content_tokens, tokenize_code};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExpectedSymbol {
    pub name: String,
    pub kind: SymbolKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub section_id: String,
    #[serde(default)]
    pub expected_folders: BTreeSet<String>,
    #[serde(default)]
    pub expected_files: BTreeSet<String>,
    #[serde(default)]
    pub expected_symbols: BTreeSet<ExpectedSymbol>,
    /// Folder → architectural layer label. A path takes the label of its
    /// longest labelled ancestor.
    #[serde(default)]
    pub layers: BTreeMap<String, String>,
}

impl GroundTruthEntry {
    pub fn layer_of(&self, path: &str) -> Option<&str> {
        self.layers
            .iter()
            .filter(|(folder, _)| {
                folder.as_str() == "."
                    || folder.is_empty()
                    || *folder == path
                    || is_ancestor(folder, path)
            })
            .max_by_key(|(folder, _)| {
                if folder.as_str() == "." {
                    0
                } else {
                    folder.len()
                }
            })
            .map(|(_, label)| label.as_str())
    }

    /// Layers the section is expected to touch.
    pub fn expected_layers(&self) -> BTreeSet<String> {
        self.expected_folders
            .iter()
            .chain(&self.expected_files)
            .filter_map(|p| self.layer_of(p))
            .map(str::to_string)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    entries: BTreeMap<String, GroundTruthEntry>,
}

impl GroundTruth {
    pub fn from_entries(entries: Vec<GroundTruthEntry>) -> Result<Self, EvalError> {
        let mut map = BTreeMap::new();
        for e in entries {
            let id = e.section_id.clone();
            if map.insert(id.clone(), e).is_some() {
                return Err(EvalError::DuplicateSection(id));
            }
        }
        Ok(Self { entries: map })
    }

    pub fn parse(json: &str) -> Result<Self, EvalError> {
        let entries: Vec<GroundTruthEntry> =
            serde_json::from_str(json).map_err(|e| EvalError::Malformed(e.to_string()))?;
        Self::from_entries(entries)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn entry(&self, section_id: &str) -> Result<&GroundTruthEntry, EvalError> {
        self.entries
            .get(section_id)
            .ok_or_else(|| EvalError::MissingGroundTruth(section_id.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = &GroundTruthEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every entry must name a section of `spec`.
    pub fn check_against(&self, spec: &SpecDocument) -> Result<(), EvalError> {
        match self.entries.keys().find(|id| spec.section(id).is_none()) {
            Some(id) => Err(EvalError::UnknownSection(id.clone())),
            None => Ok(()),
        }
    }
}

fn mapped_files(trace: &SectionTrace) -> BTreeSet<&str> {
    trace.files.iter().map(|f| f.path.as_str()).collect()
}

fn evaluated(traces: &[SectionTrace]) -> impl Iterator<Item = &SectionTrace> {
    traces.iter().filter(|t| !t.is_error())
}

/// Share of cited files that exist in the repository, over the union of all
/// sections. Vacuously 100 when nothing was cited.
pub fn file_existence_accuracy(traces: &[SectionTrace], model: &RepoModel) -> f64 {
    let cited: BTreeSet<&str> = evaluated(traces).flat_map(mapped_files).collect();
    if cited.is_empty() {
        return 100.0;
    }
    let real = cited.iter().filter(|f| model.has_file(f)).count();
    100.0 * real as f64 / cited.len() as f64
}

/// Recall of expected files for one section; `None` when nothing is expected.
pub fn section_file_recall(trace: &SectionTrace, entry: &GroundTruthEntry) -> Option<f64> {
    if entry.expected_files.is_empty() {
        return None;
    }
    let mapped = mapped_files(trace);
    let hit = entry
        .expected_files
        .iter()
        .filter(|f| mapped.contains(f.as_str()))
        .count();
    Some(hit as f64 / entry.expected_files.len() as f64)
}

/// Share of a section's cited files that were expected; `None` when the
/// section cites nothing.
pub fn section_file_precision(trace: &SectionTrace, entry: &GroundTruthEntry) -> Option<f64> {
    let mapped = mapped_files(trace);
    if mapped.is_empty() {
        return None;
    }
    let hit = mapped
        .iter()
        .filter(|f| entry.expected_files.contains(**f))
        .count();
    Some(hit as f64 / mapped.len() as f64)
}

fn macro_average(
    traces: &[SectionTrace],
    gt: &GroundTruth,
    per_section: fn(&SectionTrace, &GroundTruthEntry) -> Option<f64>,
) -> Result<f64, EvalError> {
    let mut values = Vec::new();
    for t in evaluated(traces) {
        if let Some(v) = per_section(t, gt.entry(&t.section_id)?) {
            values.push(v);
        }
    }
    if values.is_empty() {
        return Ok(100.0);
    }
    Ok(100.0 * values.iter().sum::<f64>() / values.len() as f64)
}

/// Macro-averaged recall of expected files over sections that expect any.
/// Errored sections are left out.
pub fn file_mapping_accuracy(traces: &[SectionTrace], gt: &GroundTruth) -> Result<f64, EvalError> {
    macro_average(traces, gt, section_file_recall)
}

/// Supplementary: macro-averaged precision over sections that cite files.
pub fn file_mapping_precision(traces: &[SectionTrace], gt: &GroundTruth) -> Result<f64, EvalError> {
    macro_average(traces, gt, section_file_precision)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub confidence_pct: f64,
    pub elements_per_section: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Mean confidence over validated symbols that carry one, and mean number
/// of validated symbols per non-errored section.
pub fn confidence_and_coverage(traces: &[SectionTrace]) -> Coverage {
    let sections: Vec<&SectionTrace> = evaluated(traces).collect();
    if sections.is_empty() {
        return Coverage {
            confidence_pct: 0.0,
            elements_per_section: 0.0,
            warning: Some("no evaluated sections".into()),
        };
    }
    let confs: Vec<f64> = sections
        .iter()
        .flat_map(|t| t.validated_symbols.iter().filter_map(|v| v.confidence))
        .collect();
    let elements: usize = sections.iter().map(|t| t.validated_symbols.len()).sum();
    let (confidence_pct, warning) = if confs.is_empty() {
        (
            0.0,
            Some("no validated symbol carries a confidence".to_string()),
        )
    } else {
        (100.0 * confs.iter().sum::<f64>() / confs.len() as f64, None)
    };
    Coverage {
        confidence_pct,
        elements_per_section: elements as f64 / sections.len() as f64,
        warning,
    }
}

pub const DRIFT_EXACT: f64 = 0.0;
pub const DRIFT_MINOR: f64 = 0.3;
pub const DRIFT_WRONG_ITEMS: f64 = 0.5;
pub const DRIFT_WRONG_LAYER: f64 = 1.0;
/// Extra same-layer items tolerated as minor drift.
pub const DRIFT_MINOR_EXTRAS: usize = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftBreakdown {
    pub folder: f64,
    pub file: f64,
    pub symbol: f64,
}

impl DriftBreakdown {
    pub fn total(&self) -> f64 {
        // levels take one decimal each; keep the sum free of float noise
        ((self.folder + self.file + self.symbol) * 10.0).round() / 10.0
    }
}

/// One level of the rubric. `mapped_layers` holds the layer of every
/// mapped item (`None` when unlabelled).
pub fn level_drift<T: Ord>(
    mapped: &BTreeSet<T>,
    expected: &BTreeSet<T>,
    mapped_layers: &[Option<String>],
    expected_layers: &BTreeSet<String>,
) -> f64 {
    if mapped == expected {
        return DRIFT_EXACT;
    }
    let stray = mapped_layers
        .iter()
        .any(|l| l.as_ref().is_none_or(|l| !expected_layers.contains(l)));
    let covered: BTreeSet<&String> = mapped_layers.iter().flatten().collect();
    let missed_layer = expected_layers.iter().any(|l| !covered.contains(l));
    if stray || missed_layer {
        return DRIFT_WRONG_LAYER;
    }
    if expected.is_subset(mapped) && mapped.difference(expected).count() <= DRIFT_MINOR_EXTRAS {
        DRIFT_MINOR
    } else {
        DRIFT_WRONG_ITEMS
    }
}

/// Drift of one trace against its ground-truth entry, level by level.
/// Symbols are compared by (name, kind) and placed in the layer of their file.
pub fn drift_against(trace: &SectionTrace, entry: &GroundTruthEntry) -> DriftBreakdown {
    let expected_layers = entry.expected_layers();
    let layer = |p: &str| entry.layer_of(p).map(str::to_string);

    let folders: BTreeSet<String> = trace.folders.iter().map(|f| f.path.clone()).collect();
    let folder_layers: Vec<_> = folders.iter().map(|f| layer(f)).collect();

    let files: BTreeSet<String> = trace.files.iter().map(|f| f.path.clone()).collect();
    let file_layers: Vec<_> = files.iter().map(|f| layer(f)).collect();

    let symbols: BTreeSet<ExpectedSymbol> = trace
        .validated_symbols
        .iter()
        .map(|v| ExpectedSymbol {
            name: v.symbol.name.clone(),
            kind: v.symbol.kind,
        })
        .collect();
    let symbol_layers: Vec<_> = trace
        .validated_symbols
        .iter()
        .map(|v| layer(&v.symbol.file))
        .collect();

    DriftBreakdown {
        folder: level_drift(
            &folders,
            &entry.expected_folders,
            &folder_layers,
            &expected_layers,
        ),
        file: level_drift(
            &files,
            &entry.expected_files,
            &file_layers,
            &expected_layers,
        ),
        symbol: level_drift(
            &symbols,
            &entry.expected_symbols,
            &symbol_layers,
            &expected_layers,
        ),
    }
}

pub fn drift_score(trace: &SectionTrace, gt: &GroundTruth) -> Result<DriftBreakdown, EvalError> {
    Ok(drift_against(trace, gt.entry(&trace.section_id)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub section_id: String,
    pub title: String,
    pub gap_notes: String,
    /// Normative sentences with no validated symbol that mentions them.
    pub unmapped_requirements: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Sections grouped by status; errored sections form their own group, so
/// the groups partition the section set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub groups: BTreeMap<String, Vec<GapEntry>>,
}

pub const ERRORED_GROUP: &str = "Errored";

impl GapReport {
    pub fn count(&self, group: &str) -> usize {
        self.groups.get(group).map_or(0, Vec::len)
    }

    pub fn total(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    /// Everything that is not fully implemented.
    pub fn gaps(&self) -> impl Iterator<Item = &GapEntry> {
        self.groups
            .iter()
            .filter(|(k, _)| k.as_str() != Status::Implemented.as_str())
            .flat_map(|(_, v)| v)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Gap report\n\n| Status | Sections |\n|---|---|\n");
        let order: Vec<&str> = Status::ALL
            .iter()
            .map(|s| s.as_str())
            .chain([ERRORED_GROUP])
            .collect();
        for g in &order {
            let _ = writeln!(out, "| {g} | {} |", self.count(g));
        }
        for g in order.iter().filter(|g| **g != Status::Implemented.as_str()) {
            let Some(entries) = self.groups.get(*g).filter(|v| !v.is_empty()) else {
                continue;
            };
            let _ = write!(out, "\n## {g}\n");
            for e in entries {
                let _ = write!(out, "\n### {} {}\n\n", e.section_id, e.title);
                if let Some(err) = &e.error {
                    let _ = writeln!(out, "Error: {err}");
                }
                if !e.gap_notes.is_empty() {
                    let _ = writeln!(out, "{}", e.gap_notes);
                }
                if !e.unmapped_requirements.is_empty() {
                    out.push_str("\nUnmapped requirements:\n\n");
                    for r in &e.unmapped_requirements {
                        let _ = writeln!(out, "- {r}");
                    }
                }
            }
        }
        out
    }
}

fn unmapped_requirements(body: &str, trace: &SectionTrace) -> Vec<String> {
    let symbol_tokens: BTreeSet<String> = trace
        .validated_symbols
        .iter()
        .flat_map(|v| tokenize_code(&v.symbol.name))
        .flat_map(|t| t.split('_').map(str::to_string).collect::<Vec<_>>())
        .collect();
    sentence_spans(body)
        .into_iter()
        .map(|(a, b)| crate::text::one_line(&body[a..b]))
        .filter(|s| is_normative(s))
        .filter(|s| content_tokens(s).is_disjoint(&symbol_tokens))
        .collect()
}

pub fn gap_report(traces: &[SectionTrace], spec: &SpecDocument) -> GapReport {
    let mut groups: BTreeMap<String, Vec<GapEntry>> = BTreeMap::new();
    for t in traces {
        let section = spec.section(&t.section_id);
        let group = match (t.status, &t.error) {
            (Some(s), None) => s.as_str(),
            _ => ERRORED_GROUP,
        };
        let unmapped = match (t.status, section) {
            (Some(Status::Implemented) | Some(Status::NotApplicable), _) | (_, None) => Vec::new(),
            (_, Some(s)) => unmapped_requirements(&s.body, t),
        };
        groups.entry(group.to_string()).or_default().push(GapEntry {
            section_id: t.section_id.clone(),
            title: section.map(|s| s.title.clone()).unwrap_or_default(),
            gap_notes: t.gap_notes.clone(),
            unmapped_requirements: unmapped,
            error: t.error.clone(),
        });
    }
    GapReport { groups }
}

/// One method's completed run, as fed to [`compare_methods`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub method: String,
    pub traces: Vec<SectionTrace>,
    /// Provider accounting; `None` for methods that never consult one.
    pub ledger: Option<LedgerSnapshot>,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub confidence_pct: Option<f64>,
    pub elements_per_section: Option<f64>,
    pub runtime_minutes: Option<f64>,
    pub tokens_millions: Option<f64>,
    pub file_existence_pct: f64,
    pub file_mapping_pct: f64,
    /// Supplementary; not one of the headline metrics.
    pub file_precision_pct: f64,
    pub mean_drift: f64,
    /// Wall-clock time, kept even where the runtime column is N/A.
    pub wall_seconds: f64,
    pub total_tokens: Option<u64>,
    pub errored_sections: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionDetail {
    pub method: String,
    pub section_id: String,
    pub status: Option<Status>,
    pub file_recall: Option<f64>,
    pub file_precision: Option<f64>,
    pub drift: Option<DriftBreakdown>,
    pub drift_total: Option<f64>,
    pub validated_symbols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<MethodRow>,
    pub sections: Vec<SectionDetail>,
}

pub const TABLE_HEADER: [&str; 9] = [
    "Method",
    "Confidence (%)",
    "Elements per Section",
    "Runtime (min)",
    "Tokens (M)",
    "File Exist. (%)",
    "File Map. Acc. (%)",
    "Mean Drift",
    "File Precision (%, supplementary)",
];

fn or_na(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "N/A".to_string(), |x| format!("{x:.decimals$}"))
}

impl EvalReport {
    /// Markdown comparison table, one row per method.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("| {} |\n", TABLE_HEADER.join(" | "));
        out.push_str(&format!("|{}\n", "---|".repeat(TABLE_HEADER.len())));
        for r in &self.rows {
            let cells = [
                r.method.clone(),
                or_na(r.confidence_pct, 1),
                or_na(r.elements_per_section, 2),
                or_na(r.runtime_minutes, 2),
                or_na(r.tokens_millions, 4),
                format!("{:.1}", r.file_existence_pct),
                format!("{:.1}", r.file_mapping_pct),
                format!("{:.2}", r.mean_drift),
                format!("{:.1}", r.file_precision_pct),
            ];
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// All metrics for every run. Methods without a provider ledger get N/A
/// for confidence, elements, runtime and tokens, as retrieval baselines do.
pub fn compare_methods(
    runs: &[MethodRun],
    gt: &GroundTruth,
    model: &RepoModel,
) -> Result<EvalReport, EvalError> {
    let mut rows = Vec::with_capacity(runs.len());
    let mut sections = Vec::new();
    for run in runs {
        let mut drifts = Vec::new();
        for t in &run.traces {
            let (recall, precision, drift) = if t.is_error() {
                (None, None, None)
            } else {
                let entry = gt.entry(&t.section_id)?;
                let d = drift_against(t, entry);
                drifts.push(d.total());
                (
                    section_file_recall(t, entry),
                    section_file_precision(t, entry),
                    Some(d),
                )
            };
            sections.push(SectionDetail {
                method: run.method.clone(),
                section_id: t.section_id.clone(),
                status: t.status,
                file_recall: recall,
                file_precision: precision,
                drift,
                drift_total: drift.map(|d| d.total()),
                validated_symbols: t.validated_symbols.len(),
                error: t.error.clone(),
            });
        }
        let coverage = confidence_and_coverage(&run.traces);
        let has_provider = run.ledger.is_some();
        let mut warnings: Vec<String> = Vec::new();
        if has_provider {
            warnings.extend(coverage.warning.clone());
        }
        let mean_drift = if drifts.is_empty() {
            0.0
        } else {
            drifts.iter().sum::<f64>() / drifts.len() as f64
        };
        rows.push(MethodRow {
            method: run.method.clone(),
            confidence_pct: has_provider.then_some(coverage.confidence_pct),
            elements_per_section: has_provider.then_some(coverage.elements_per_section),
            runtime_minutes: has_provider.then_some(run.runtime_seconds / 60.0),
            tokens_millions: run.ledger.as_ref().map(|l| l.total_tokens as f64 / 1e6),
            file_existence_pct: file_existence_accuracy(&run.traces, model),
            file_mapping_pct: file_mapping_accuracy(&run.traces, gt)?,
            file_precision_pct: file_mapping_precision(&run.traces, gt)?,
            mean_drift,
            wall_seconds: run.runtime_seconds,
            total_tokens: run.ledger.as_ref().map(|l| l.total_tokens),
            errored_sections: run.traces.iter().filter(|t| t.is_error()).count(),
            warnings,
        });
    }
    Ok(EvalReport { rows, sections })
}
