//! Ingestion of Universal Ctags JSON-lines output (`--output-format=json`).

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::Deserialize;

use super::{normalize_path, CodeSymbol, RepoModel, SymbolKind};
use crate::error::MalformedTagLine;

#[derive(Debug, Deserialize)]
struct TagLine {
    #[serde(rename = "_type")]
    ty: Option<String>,
    name: String,
    path: String,
    line: usize,
    kind: String,
    end: Option<usize>,
    signature: Option<String>,
    pattern: Option<String>,
    typeref: Option<String>,
    scope: Option<String>,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct TagIngestReport {
    pub added: usize,
    /// Tag kinds that do not map onto a symbol kind, with counts.
    pub skipped_kinds: BTreeMap<String, usize>,
    pub errors: Vec<MalformedTagLine>,
}

enum Mapped {
    Symbol(SymbolKind, bool),
    Skip,
}

fn map_kind(tag: &TagLine) -> Mapped {
    let file_scope = tag.scope.is_none();
    let const_qualified = tag.typeref.as_deref().is_some_and(|t| {
        t.split(|c: char| !c.is_alphanumeric())
            .any(|w| w == "const")
    }) || tag.pattern.as_deref().is_some_and(|p| {
        p.split(|c: char| !c.is_alphanumeric() && c != '_')
            .any(|w| w == "const")
    });
    match tag.kind.as_str() {
        "define" | "macro" | "d" => Mapped::Symbol(SymbolKind::Macro, false),
        "function" | "f" => Mapped::Symbol(SymbolKind::Function, false),
        "prototype" | "p" => Mapped::Symbol(SymbolKind::Function, true),
        "struct" | "s" | "class" | "c" => Mapped::Symbol(SymbolKind::Struct, false),
        "enum" | "g" => Mapped::Symbol(SymbolKind::Enum, false),
        "enumerator" | "e" => Mapped::Symbol(SymbolKind::Constant, false),
        "typedef" | "t" => Mapped::Symbol(SymbolKind::Typedef, false),
        "variable" | "v" if file_scope && const_qualified => {
            Mapped::Symbol(SymbolKind::Constant, false)
        }
        _ => Mapped::Skip,
    }
}

fn signature_of(tag: &TagLine) -> String {
    if let Some(p) = &tag.pattern {
        let p = p.trim_start_matches('/').trim_end_matches('/');
        let p = p.trim_start_matches('^').trim_end_matches('$');
        return crate::text::one_line(p);
    }
    match &tag.signature {
        Some(sig) => format!("{}{}", tag.name, sig),
        None => tag.name.clone(),
    }
}

/// Ingests tags into `model`. Unknown kinds are counted and skipped,
/// malformed lines are collected and processing continues.
pub fn ingest_tags_stream<R: BufRead>(reader: R, model: &mut RepoModel) -> TagIngestReport {
    let mut report = TagIngestReport::default();
    let root = model.root.to_string_lossy().replace('\\', "/");
    let mut pending = Vec::new();
    // anonymous aggregate name -> typedef name, resolved after the pass
    let mut anon_alias: HashMap<String, String> = HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                report.errors.push(MalformedTagLine {
                    line: lineno,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let tag: TagLine = match serde_json::from_str(&line) {
            Ok(t) => t,
            Err(e) => {
                // pseudo-tags carry no line/kind
                if line.contains("\"_type\": \"ptag\"") || line.contains("\"_type\":\"ptag\"") {
                    continue;
                }
                report.errors.push(MalformedTagLine {
                    line: lineno,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if tag.ty.as_deref().is_some_and(|t| t != "tag") {
            continue;
        }
        let mut path = tag.path.replace('\\', "/");
        if let Some(stripped) = path.strip_prefix(&root) {
            path = stripped.to_string();
        }
        let path = normalize_path(&path);
        if !model.has_file(&path) {
            report.errors.push(MalformedTagLine {
                line: lineno,
                reason: format!("path {path:?} is not a scanned file"),
            });
            continue;
        }
        if tag.line == 0 {
            report.errors.push(MalformedTagLine {
                line: lineno,
                reason: "line must be >= 1".into(),
            });
            continue;
        }
        match map_kind(&tag) {
            Mapped::Skip => {
                *report.skipped_kinds.entry(tag.kind.clone()).or_default() += 1;
            }
            Mapped::Symbol(kind, declaration) => {
                if kind == SymbolKind::Typedef {
                    if let Some(target) = tag
                        .typeref
                        .as_deref()
                        .and_then(|t| t.split_once(':'))
                        .map(|(_, name)| name)
                        .filter(|n| n.starts_with("__anon"))
                    {
                        anon_alias
                            .entry(target.to_string())
                            .or_insert_with(|| tag.name.clone());
                    }
                }
                let line_end = tag.end.filter(|&e| e >= tag.line).unwrap_or(tag.line);
                pending.push(CodeSymbol {
                    name: tag.name.clone(),
                    kind,
                    file: path,
                    line_start: tag.line,
                    line_end,
                    signature: signature_of(&tag),
                    declaration,
                });
            }
        }
    }
    let mut symbols = Vec::with_capacity(pending.len());
    for mut s in pending {
        if s.name.starts_with("__anon") {
            match anon_alias.get(&s.name) {
                Some(alias) => s.name = alias.clone(),
                None => continue,
            }
        }
        symbols.push(s);
    }
    report.added = model.add_symbols(symbols);
    report
}
