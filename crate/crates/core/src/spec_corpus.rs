//! Specification documents: markdown sectioning, query-term extraction and
//! embedding-based semantic chunking.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{dot, Embedder};
use crate::error::{EmbeddingError, SpecError};
use crate::text::{is_stopword, tokenize_code};

/// Headings deeper than this fold into the parent section's body.
pub const MAX_SECTION_LEVEL: usize = 4;
pub const DEFAULT_MAX_TERMS: usize = 12;
pub const DEFAULT_WINDOW_SENTENCES: usize = 3;
pub const DEFAULT_BOUNDARY_THRESHOLD: f64 = 0.55;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecSection {
    pub id: String,
    pub title: String,
    pub body: String,
    /// 0-based position in the document.
    pub order: usize,
    /// Heading level (1..=4).
    pub level: usize,
    pub query_terms: Vec<String>,
}

impl SpecSection {
    /// Title and body joined, the text used for matching and chunking.
    pub fn full_text(&self) -> String {
        if self.body.is_empty() {
            self.title.clone()
        } else {
            format!("{}\n\n{}", self.title, self.body)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecDocument {
    pub source_path: String,
    pub sections: Vec<SpecSection>,
}

impl SpecDocument {
    pub fn section(&self, id: &str) -> Option<&SpecSection> {
        self.sections.iter().find(|s| s.id == id)
    }
}

/// A contiguous span of a source text. Offsets are byte offsets that always
/// fall on character boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocChunk {
    pub text: String,
    pub start_offset: usize,
    pub end_offset: usize,
    pub embedding: Option<Vec<f64>>,
}

pub fn parse_spec_file(path: &Path) -> Result<SpecDocument, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut doc = parse_spec_markdown(&text)?;
    doc.source_path = path.display().to_string();
    Ok(doc)
}

struct Heading {
    level: usize,
    raw_title: String,
    line_idx: usize,
}

fn atx_heading(line: &str) -> Option<(usize, &str)> {
    let trimmed = line.trim_start_matches(' ');
    if line.len() - trimmed.len() > 3 {
        return None;
    }
    let level = trimmed.bytes().take_while(|&b| b == b'#').count();
    if level == 0 || level > 6 {
        return None;
    }
    let rest = &trimmed[level..];
    if !rest.is_empty() && !rest.starts_with([' ', '\t']) {
        return None;
    }
    let title = rest.trim().trim_end_matches('#').trim_end();
    Some((level, title))
}

/// Splits `"4.2 File Discovery"` into `("4.2", "File Discovery")`.
fn numeric_prefix(title: &str) -> Option<(String, String)> {
    let mut parts = title.splitn(2, char::is_whitespace);
    let head = parts.next()?.trim_end_matches('.');
    let rest = parts.next().unwrap_or("").trim();
    let ok = !head.is_empty()
        && head
            .split('.')
            .all(|c| !c.is_empty() && c.bytes().all(|b| b.is_ascii_digit()));
    ok.then(|| (head.to_string(), rest.to_string()))
}

pub fn parse_spec_markdown(text: &str) -> Result<SpecDocument, SpecError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut headings = Vec::new();
    let mut in_fence = false;
    for (idx, line) in lines.iter().enumerate() {
        let t = line.trim_start();
        if t.starts_with("```") || t.starts_with("~~~") {
            in_fence = !in_fence;
            continue;
        }
        if in_fence {
            continue;
        }
        if let Some((level, title)) = atx_heading(line) {
            if level <= MAX_SECTION_LEVEL {
                headings.push(Heading {
                    level,
                    raw_title: title.to_string(),
                    line_idx: idx,
                });
            }
        }
    }
    if headings.is_empty() {
        return Err(SpecError::EmptyDocument);
    }

    let top = headings.iter().map(|h| h.level).min().unwrap_or(1);
    let mut counters = [0usize; MAX_SECTION_LEVEL];
    let mut seen = HashSet::new();
    let mut sections = Vec::with_capacity(headings.len());
    for (order, h) in headings.iter().enumerate() {
        let depth = h.level - top + 1;
        counters[depth - 1] += 1;
        counters[depth..].iter_mut().for_each(|c| *c = 0);
        let synthesized = counters[..depth]
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(".");

        let (mut id, title) = match numeric_prefix(&h.raw_title) {
            Some((num, rest)) => {
                let comps: Vec<usize> = num.split('.').filter_map(|c| c.parse().ok()).collect();
                if comps.len() == depth {
                    counters[..depth].copy_from_slice(&comps);
                }
                (num, rest)
            }
            None => (synthesized.clone(), h.raw_title.clone()),
        };
        if seen.contains(&id) {
            id = synthesized;
            let base = id.clone();
            let mut n = 2;
            while seen.contains(&id) {
                id = format!("{base}-{n}");
                n += 1;
            }
        }
        seen.insert(id.clone());

        let end = headings
            .get(order + 1)
            .map_or(lines.len(), |next| next.line_idx);
        let body = lines[h.line_idx + 1..end].join("\n").trim().to_string();
        let mut section = SpecSection {
            id,
            title,
            body,
            order,
            level: depth,
            query_terms: Vec::new(),
        };
        section.query_terms = extract_query_terms(&section, DEFAULT_MAX_TERMS);
        sections.push(section);
    }
    Ok(SpecDocument {
        source_path: String::new(),
        sections,
    })
}

/// Renders a document back to markdown with explicit numeric ids.
pub fn render_markdown(doc: &SpecDocument) -> String {
    let mut out = String::new();
    for s in &doc.sections {
        out.push_str(&"#".repeat(s.level));
        out.push(' ');
        out.push_str(&s.id);
        if !s.title.is_empty() {
            out.push(' ');
            out.push_str(&s.title);
        }
        out.push_str("\n\n");
        if !s.body.is_empty() {
            out.push_str(&s.body);
            out.push_str("\n\n");
        }
    }
    out
}

fn is_technical(word: &str) -> bool {
    let acronym = word.chars().count() >= 2
        && word
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
        && word.chars().any(|c| c.is_ascii_uppercase());
    let camel = word
        .as_bytes()
        .windows(2)
        .any(|w| w[0].is_ascii_lowercase() && w[1].is_ascii_uppercase());
    acronym || camel || word.contains('_') || word.contains('-')
}

/// Keyword extraction: technical tokens first, then remaining words by
/// frequency. Ties keep first-occurrence order.
pub fn extract_query_terms(section: &SpecSection, max_terms: usize) -> Vec<String> {
    struct Stat {
        display: String,
        count: usize,
        first: usize,
        technical: bool,
    }
    let text = format!("{}\n{}", section.title, section.body);
    let mut stats: HashMap<String, Stat> = HashMap::new();
    let words = text
        .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '-'))
        .map(|w| w.trim_matches(|c| c == '-' || c == '_'))
        .filter(|w| w.chars().count() >= 2)
        .filter(|w| {
            !w.chars()
                .all(|c| c.is_ascii_digit() || c == '-' || c == '_')
        })
        .filter(|w| !is_stopword(w));
    for (pos, word) in words.enumerate() {
        let key = word.to_lowercase();
        let technical = is_technical(word);
        stats
            .entry(key.clone())
            .and_modify(|s| {
                s.count += 1;
                s.technical |= technical;
            })
            .or_insert_with(|| Stat {
                // plain words are normalized; identifiers keep their spelling
                display: if technical {
                    word.to_string()
                } else {
                    key.clone()
                },
                count: 1,
                first: pos,
                technical,
            });
    }
    let mut ranked: Vec<Stat> = stats.into_values().collect();
    ranked.sort_by(|a, b| {
        b.technical
            .cmp(&a.technical)
            .then(b.count.cmp(&a.count))
            .then(a.first.cmp(&b.first))
    });
    ranked
        .into_iter()
        .take(max_terms)
        .map(|s| s.display)
        .collect()
}

/// Sentence spans covering `text` contiguously. Separators stay attached to
/// the sentence they end; spans without any alphanumeric content are merged
/// into a neighbour.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut raw = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i + 1 < bytes.len() {
        let pair = &bytes[i..i + 2];
        if matches!(pair, b". " | b"? " | b"! " | b"\n\n") {
            raw.push((start, i + 2));
            start = i + 2;
            i += 2;
        } else {
            i += 1;
        }
    }
    if start < bytes.len() {
        raw.push((start, bytes.len()));
    }

    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut pending_start: Option<usize> = None;
    for (s, e) in raw {
        let has_content = text[s..e].chars().any(char::is_alphanumeric);
        match (has_content, spans.last_mut()) {
            (true, _) => {
                spans.push((pending_start.take().unwrap_or(s), e));
            }
            (false, Some(last)) => last.1 = e,
            (false, None) => {
                pending_start.get_or_insert(s);
            }
        }
    }
    if let Some(ps) = pending_start {
        // text with no content at all
        spans.push((ps, text.len()));
    }
    spans
}

/// Similarity between the windows on either side of each sentence boundary
/// `b` (1..n), clamped at zero.
pub fn boundary_similarities(
    text: &str,
    spans: &[(usize, usize)],
    embed: &dyn Embedder,
    window_sentences: usize,
) -> Result<Vec<f64>, EmbeddingError> {
    let n = spans.len();
    let w = window_sentences.max(1);
    (1..n)
        .map(|b| {
            let left = &text[spans[b.saturating_sub(w)].0..spans[b - 1].1];
            let right = &text[spans[b].0..spans[(b + w).min(n) - 1].1];
            if !embeddable(left) || !embeddable(right) {
                return Ok(0.0);
            }
            let l = embed.embed(left)?;
            let r = embed.embed(right)?;
            Ok(dot(&l, &r).max(0.0))
        })
        .collect()
}

/// Whether the text yields any token at all; chunks of punctuation or
/// single letters carry no embedding.
fn embeddable(text: &str) -> bool {
    !tokenize_code(text).is_empty()
}

/// Splits text where adjacent sliding-window embeddings diverge.
pub fn semantic_chunk(
    text: &str,
    embed: &dyn Embedder,
    window_sentences: usize,
    boundary_threshold: f64,
) -> Result<Vec<DocChunk>, EmbeddingError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let spans = sentence_spans(text);
    let mut cuts = Vec::new();
    if boundary_threshold > 0.0 && spans.len() > 1 {
        let sims = boundary_similarities(text, &spans, embed, window_sentences)?;
        for (i, sim) in sims.iter().enumerate() {
            if *sim < boundary_threshold {
                cuts.push(spans[i + 1].0);
            }
        }
    }
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(text.len());
    bounds
        .windows(2)
        .map(|w| {
            let chunk = &text[w[0]..w[1]];
            let embedding = if embeddable(chunk) {
                Some(embed.embed(chunk)?)
            } else {
                None
            };
            Ok(DocChunk {
                text: chunk.to_string(),
                start_offset: w[0],
                end_offset: w[1],
                embedding,
            })
        })
        .collect()
}
