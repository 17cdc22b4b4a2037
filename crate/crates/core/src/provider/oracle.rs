//! Deterministic lexical stand-in for a chat model. It reads the JSON payload
//! embedded in each prompt and answers with the same contracts a model would.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use super::judge::{extract_payload, Candidate, RelevanceJudgment};
use super::{Backend, BackendReply, ProviderRequest};
use crate::error::ProviderError;
use crate::pipeline::Status;
use crate::spec_corpus::SpecSection;
use crate::text::{content_tokens, jaccard, one_line};

/// Words marking a section as carrying requirements.
const NORMATIVE: &[&str] = &["shall", "must", "should", "required", "mandatory"];

/// Minimum query terms a symbol description must share to survive validation.
pub const ORACLE_KEEP_OVERLAP: usize = 2;

/// Coverage of query vocabulary at which a section counts as implemented.
pub const ORACLE_IMPLEMENTED_COVERAGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleBackend;

fn query_vocab(terms: &[String]) -> BTreeSet<String> {
    content_tokens(&terms.join(" "))
}

/// Jaccard of query vocabulary against each description, rescaled so the
/// best candidate scores 1 (all zero when nothing overlaps).
fn normalized_scores(
    query: &BTreeSet<String>,
    descriptions: &[&str],
) -> Vec<(f64, BTreeSet<String>)> {
    let raw: Vec<(f64, BTreeSet<String>)> = descriptions
        .iter()
        .map(|d| {
            let toks = content_tokens(d);
            let shared = query.intersection(&toks).cloned().collect();
            (jaccard(query, &toks), shared)
        })
        .collect();
    let max = raw.iter().map(|(s, _)| *s).fold(0.0_f64, f64::max);
    raw.into_iter()
        .map(|(s, shared)| (if max > 0.0 { s / max } else { 0.0 }, shared))
        .collect()
}

fn judge_terms(query_terms: &[String], candidates: &[Candidate]) -> Vec<RelevanceJudgment> {
    let q = query_vocab(query_terms);
    let descs: Vec<&str> = candidates.iter().map(|c| c.description.as_str()).collect();
    candidates
        .iter()
        .zip(normalized_scores(&q, &descs))
        .map(|(c, (score, shared))| RelevanceJudgment {
            candidate_id: c.id.clone(),
            score,
            confidence: score,
            rationale: if shared.is_empty() {
                "no shared terms".into()
            } else {
                format!(
                    "shared terms: {}",
                    shared.into_iter().collect::<Vec<_>>().join(", ")
                )
            },
        })
        .collect()
}

/// Lexical relevance of each candidate to the section's query terms.
pub fn oracle_judge(section: &SpecSection, candidates: &[Candidate]) -> Vec<RelevanceJudgment> {
    judge_terms(&section.query_terms, candidates)
}

pub fn is_normative(text: &str) -> bool {
    crate::text::tokenize_code(text)
        .iter()
        .any(|t| NORMATIVE.contains(&t.as_str()))
}

fn str_field<'a>(v: &'a Value, key: &str) -> &'a str {
    v.get(key).and_then(Value::as_str).unwrap_or_default()
}

fn strings(v: Option<&Value>) -> Vec<String> {
    v.and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .filter_map(|x| x.as_str().map(str::to_string))
                .collect()
        })
        .unwrap_or_default()
}

fn candidates_of(v: Option<&Value>) -> Result<Vec<Candidate>, ProviderError> {
    match v {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| ProviderError::InvalidRequest(format!("bad candidate list: {e}"))),
        None => Ok(Vec::new()),
    }
}

fn describe_folder(p: &Value) -> String {
    let folder = str_field(p, "folder");
    let name = if folder.is_empty() { "(root)" } else { folder };
    let summaries: Vec<String> = p
        .get("files")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .map(|f| one_line(str_field(f, "summary")))
        .filter(|s| !s.is_empty())
        .collect();
    if summaries.is_empty() {
        let subs = strings(p.get("subfolders"));
        if subs.is_empty() {
            return format!("{name}: no source files");
        }
        return format!("{name}: groups {}", subs.join(", "));
    }
    format!("{name}: {}", summaries.join(" "))
}

fn describe_folders(p: &Value) -> String {
    let out: Vec<Value> = p
        .get("folders")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .map(|f| json!({"folder": str_field(f, "folder"), "description": describe_folder(f)}))
        .collect();
    Value::Array(out).to_string()
}

fn describe_files(p: &Value) -> String {
    let out: Vec<Value> = p
        .get("files")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .map(|f| {
            let name = str_field(f, "name");
            let summary = one_line(str_field(f, "summary"));
            let description = if summary.is_empty() {
                format!("source file {name}")
            } else {
                summary
            };
            json!({"name": name, "description": description})
        })
        .collect();
    Value::Array(out).to_string()
}

fn describe_symbols(p: &Value) -> String {
    let out: Vec<Value> = p
        .get("symbols")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .map(|s| {
            let comment = one_line(str_field(s, "comment"));
            let description = if comment.is_empty() {
                format!("{} {}", str_field(s, "kind"), str_field(s, "name"))
            } else {
                comment
            };
            json!({"id": str_field(s, "id"), "description": description})
        })
        .collect();
    Value::Array(out).to_string()
}

fn judge(p: &Value) -> Result<String, ProviderError> {
    let section = p.get("section").cloned().unwrap_or(Value::Null);
    let terms = strings(section.get("query_terms"));
    let candidates = candidates_of(p.get("candidates"))?;
    let out: Vec<Value> = judge_terms(&terms, &candidates)
        .into_iter()
        .map(|j| {
            json!({
                "id": j.candidate_id,
                "score": j.score,
                "confidence": j.confidence,
                "rationale": j.rationale,
            })
        })
        .collect();
    Ok(Value::Array(out).to_string())
}

fn validate(p: &Value) -> Result<String, ProviderError> {
    let section = p.get("section").cloned().unwrap_or(Value::Null);
    let terms = strings(section.get("query_terms"));
    let q = query_vocab(&terms);
    let symbols = candidates_of(p.get("symbols"))?;
    let descs: Vec<&str> = symbols.iter().map(|c| c.description.as_str()).collect();

    let mut keep = Vec::new();
    let mut covered = BTreeSet::new();
    for (c, (score, shared)) in symbols.iter().zip(normalized_scores(&q, &descs)) {
        if shared.len() >= ORACLE_KEEP_OVERLAP {
            keep.push(json!({"id": c.id, "confidence": score}));
            covered.extend(shared);
        }
    }
    let coverage = if q.is_empty() {
        0.0
    } else {
        covered.len() as f64 / q.len() as f64
    };
    let text = format!(
        "{} {}",
        str_field(&section, "title"),
        str_field(&section, "body")
    );
    let status = if keep.is_empty() {
        if is_normative(&text) {
            Status::NotImplemented
        } else {
            Status::NotApplicable
        }
    } else if coverage >= ORACLE_IMPLEMENTED_COVERAGE {
        Status::Implemented
    } else {
        Status::PartiallyImplemented
    };
    let uncovered: Vec<&str> = q.difference(&covered).map(String::as_str).collect();
    let gap_notes = match status {
        Status::NotApplicable => String::new(),
        Status::NotImplemented => format!(
            "no implementation found for \"{}\"",
            str_field(&section, "title")
        ),
        _ if uncovered.is_empty() => String::new(),
        _ => format!(
            "requirements without matching code: {}",
            uncovered.join(", ")
        ),
    };
    let confidence = if keep.is_empty() {
        1.0
    } else {
        keep.iter()
            .filter_map(|k| k["confidence"].as_f64())
            .sum::<f64>()
            / keep.len() as f64
    };
    Ok(json!({
        "keep": keep,
        "status": status,
        "confidence": confidence,
        "gap_notes": gap_notes,
    })
    .to_string())
}

impl Backend for OracleBackend {
    fn complete(&self, request: &ProviderRequest) -> Result<BackendReply, ProviderError> {
        let payload = extract_payload(&request.user_prompt).ok_or_else(|| {
            ProviderError::InvalidRequest("prompt carries no JSON payload".into())
        })?;
        let text = match str_field(&payload, "task") {
            "describe_folders" => describe_folders(&payload),
            "describe_files" => describe_files(&payload),
            "describe_symbols" => describe_symbols(&payload),
            "judge" => judge(&payload)?,
            "validate" => validate(&payload)?,
            other => {
                return Err(ProviderError::InvalidRequest(format!(
                    "oracle cannot answer task {other:?}"
                )))
            }
        };
        Ok(BackendReply { text, usage: None })
    }
}
