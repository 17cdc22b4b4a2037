//! Prompt construction and tolerant parsing of the JSON judgment contracts.
//!
//! Every prompt embeds its structured input as a fenced `json` block so
//! both a chat model and the offline oracle read the same request.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Phase, Provider, ProviderRequest};
use crate::error::ProviderError;
use crate::pipeline::Status;
use crate::spec_corpus::SpecSection;

pub const SYSTEM_PROMPT: &str = "You map hardware/software specification text to source code. \
Answer precisely and only in the requested format.";

pub const JSON_ONLY: &str = "Respond with JSON only.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub description: String,
}

impl Candidate {
    pub fn new(id: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceJudgment {
    pub candidate_id: String,
    pub score: f64,
    pub confidence: f64,
    pub rationale: String,
}

pub fn payload_request(system: &str, instructions: &str, payload: &Value) -> ProviderRequest {
    let body = serde_json::to_string_pretty(payload).expect("json value serializes");
    ProviderRequest::new(system, format!("{instructions}\n\n```json\n{body}\n```\n"))
}

/// Pulls the fenced JSON payload back out of a prompt built by [`payload_request`].
pub fn extract_payload(user_prompt: &str) -> Option<Value> {
    let start = user_prompt.find("```json\n")? + "```json\n".len();
    // raw newlines cannot occur inside JSON strings, so the first closing
    // fence on its own line ends the payload
    let len = user_prompt[start..].find("\n```")?;
    serde_json::from_str(&user_prompt[start..start + len]).ok()
}

/// Finds the first JSON value of the wanted shape in free-form model output,
/// skipping prose and markdown fences around it.
fn find_embedded(text: &str, open: char, accept: impl Fn(&Value) -> bool) -> Option<Value> {
    if let Ok(v) = serde_json::from_str::<Value>(text.trim()) {
        if accept(&v) {
            return Some(v);
        }
    }
    for (i, _) in text.match_indices(open) {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(v)) = stream.next() {
            if accept(&v) {
                return Some(v);
            }
        }
    }
    None
}

pub fn parse_json_array(text: &str) -> Option<Vec<Value>> {
    match find_embedded(text, '[', Value::is_array)? {
        Value::Array(a) => Some(a),
        _ => None,
    }
}

pub fn parse_json_object(text: &str) -> Option<serde_json::Map<String, Value>> {
    match find_embedded(text, '{', Value::is_object)? {
        Value::Object(o) => Some(o),
        _ => None,
    }
}

/// Sends `request`; if `parse` rejects the reply, asks once more for bare JSON.
pub fn complete_parsed<T>(
    provider: &Provider,
    phase: Phase,
    request: &ProviderRequest,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<T, ProviderError> {
    let first = provider.complete(phase, request)?;
    if let Some(v) = parse(&first.text) {
        return Ok(v);
    }
    tracing::warn!(%phase, "unparseable response, reprompting");
    let mut retry = request.clone();
    retry.user_prompt = format!("{}\n{JSON_ONLY}", request.user_prompt);
    let second = provider.complete(phase, &retry)?;
    parse(&second.text).ok_or_else(|| {
        ProviderError::Failure(format!(
            "unparseable response after reprompt: {}",
            crate::text::one_line(&second.text)
                .chars()
                .take(120)
                .collect::<String>()
        ))
    })
}

pub(crate) fn section_payload(section: &SpecSection) -> Value {
    json!({
        "id": section.id,
        "title": section.title,
        "body": section.body,
        "query_terms": section.query_terms,
    })
}

fn unit(v: Option<&Value>) -> f64 {
    v.and_then(Value::as_f64)
        .filter(|x| x.is_finite())
        .unwrap_or(0.0)
        .clamp(0.0, 1.0)
}

fn entry_id(v: &Value) -> Option<String> {
    let o = v.as_object()?;
    o.get("id")
        .or_else(|| o.get("candidate_id"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

fn stage_noun(phase: Phase) -> &'static str {
    match phase {
        Phase::FolderDiscovery => "folder",
        Phase::FileDiscovery => "file",
        _ => "code element",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JudgeMode {
    /// Score every candidate.
    Score,
    /// Final narrowing: ask for the `n` most relevant candidates.
    Select(usize),
}

/// Scores candidates against a section. Output follows the candidate order;
/// unknown ids are dropped and unjudged candidates get score 0.
pub fn judge_relevance(
    provider: &Provider,
    phase: Phase,
    section: &SpecSection,
    candidates: &[Candidate],
) -> Result<Vec<RelevanceJudgment>, ProviderError> {
    judge_with_mode(provider, phase, section, candidates, JudgeMode::Score)
}

pub fn judge_with_mode(
    provider: &Provider,
    phase: Phase,
    section: &SpecSection,
    candidates: &[Candidate],
    mode: JudgeMode,
) -> Result<Vec<RelevanceJudgment>, ProviderError> {
    if candidates.is_empty() {
        return Err(ProviderError::InvalidRequest(
            "no candidates to judge".into(),
        ));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = candidates.iter().find(|c| !seen.insert(c.id.as_str())) {
        return Err(ProviderError::InvalidRequest(format!(
            "duplicate candidate id {:?}",
            dup.id
        )));
    }

    let noun = stage_noun(phase);
    let mut instructions = format!(
        "Rate how relevant each candidate {noun} is to implementing the specification section below. \
Return a strict JSON array with one object per candidate: \
[{{\"id\": string, \"score\": number in [0,1], \"confidence\": number in [0,1], \"rationale\": string}}]."
    );
    let mut payload = json!({
        "task": "judge",
        "stage": phase,
        "section": section_payload(section),
        "candidates": candidates,
    });
    if let JudgeMode::Select(n) = mode {
        instructions.push_str(&format!(
            " This is the final selection: give the {n} {noun}s most worth inspecting the highest scores."
        ));
        payload["select"] = json!(n);
    }
    let request = payload_request(SYSTEM_PROMPT, &instructions, &payload);
    let raw = complete_parsed(provider, phase, &request, parse_json_array)?;

    let known: HashSet<&str> = candidates.iter().map(|c| c.id.as_str()).collect();
    let mut by_id: HashMap<String, RelevanceJudgment> = HashMap::new();
    for v in &raw {
        let Some(id) = entry_id(v) else {
            tracing::warn!(%phase, "judgment without id ignored");
            continue;
        };
        if !known.contains(id.as_str()) {
            tracing::warn!(%phase, id, "judgment for unknown candidate dropped");
            continue;
        }
        if by_id.contains_key(&id) {
            continue;
        }
        let score = unit(v.get("score"));
        let confidence = v.get("confidence").map_or(score, |c| unit(Some(c)));
        let rationale = v
            .get("rationale")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        by_id.insert(
            id.clone(),
            RelevanceJudgment {
                candidate_id: id,
                score,
                confidence,
                rationale,
            },
        );
    }
    Ok(candidates
        .iter()
        .map(|c| {
            by_id.remove(&c.id).unwrap_or_else(|| RelevanceJudgment {
                candidate_id: c.id.clone(),
                score: 0.0,
                confidence: 0.0,
                rationale: "not judged".into(),
            })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub section_id: String,
    pub status: Status,
    pub symbols: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationVerdict {
    /// Kept candidate ids with per-symbol confidence, in candidate order.
    pub kept: Vec<(String, f64)>,
    pub status: Status,
    pub confidence: f64,
    pub gap_notes: String,
}

/// Kept symbol ids with confidences, status, overall confidence, gap notes.
type Verdict = (Vec<(String, f64)>, Status, f64, String);

fn parse_verdict(text: &str) -> Option<Verdict> {
    let o = parse_json_object(text)?;
    let status = Status::parse_loose(o.get("status")?.as_str()?)?;
    let mut kept = Vec::new();
    if let Some(list) = o.get("keep").and_then(Value::as_array) {
        for v in list {
            match v {
                Value::String(id) => kept.push((id.clone(), 1.0)),
                other => {
                    if let Some(id) = entry_id(other) {
                        kept.push((id, unit(other.get("confidence"))));
                    }
                }
            }
        }
    }
    let confidence = unit(o.get("confidence"));
    let gap_notes = o
        .get("gap_notes")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    Some((kept, status, confidence, gap_notes))
}

/// Keep/drop judgment over discovered symbols plus a status for the section.
/// The kept set is always a subset of `symbols`.
pub fn validate_symbols(
    provider: &Provider,
    section: &SpecSection,
    symbols: &[Candidate],
    context: &[ContextEntry],
) -> Result<ValidationVerdict, ProviderError> {
    let instructions = "Validate which candidate code elements genuinely implement the specification section, \
given the previously validated sections as context. Return a strict JSON object: \
{\"keep\": [{\"id\": string, \"confidence\": number in [0,1]}], \
\"status\": \"Implemented\" | \"Partially_Implemented\" | \"Not_Implemented\" | \"Not_Applicable\", \
\"confidence\": number in [0,1], \"gap_notes\": string naming requirements with no implementation}.";
    let payload = json!({
        "task": "validate",
        "section": section_payload(section),
        "symbols": symbols,
        "context": context,
    });
    let request = payload_request(SYSTEM_PROMPT, instructions, &payload);
    let (raw_kept, mut status, confidence, gap_notes) =
        complete_parsed(provider, Phase::Validation, &request, parse_verdict)?;

    let mut conf: HashMap<String, f64> = HashMap::new();
    for (id, c) in raw_kept {
        if symbols.iter().any(|s| s.id == id) {
            conf.entry(id).or_insert(c);
        } else {
            tracing::warn!(section = %section.id, id, "validation kept an unknown symbol; dropped");
        }
    }
    let kept: Vec<(String, f64)> = symbols
        .iter()
        .filter_map(|s| conf.get(&s.id).map(|&c| (s.id.clone(), c)))
        .collect();
    if kept.is_empty() && matches!(status, Status::Implemented | Status::PartiallyImplemented) {
        status = Status::NotImplemented;
    }
    Ok(ValidationVerdict {
        kept,
        status,
        confidence,
        gap_notes,
    })
}
