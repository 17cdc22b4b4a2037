//! Structure documentation at repository, folder and file scope, generated
//! on demand through the provider and cached in memory and on disk.
//!
//! Every persisted doc starts with a marker line carrying its cache key and a
//! fingerprint of the remaining content; a doc whose body no longer matches
//! (truncated, hand-edited) is regenerated.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::clex::{header_comment, leading_comment};
use super::{parent_folder, CodeSymbol, RepoModel, SymbolKind};
use crate::error::ProviderError;
use crate::provider::judge::{complete_parsed, parse_json_array, payload_request, SYSTEM_PROMPT};
use crate::provider::{Phase, Provider};
use crate::text::{combine_fingerprints, fnv1a, one_line};

/// Bumped whenever the rendered layout changes, invalidating old caches.
const DOC_FORMAT: u64 = 1;
const MARKER_PREFIX: &str = "<!-- spectrace-cache ";
const BATCH: usize = 24;
const SAMPLE_FILES: usize = 8;

pub const REPO_DOC_NAME: &str = "repository_structure.md";
pub const FOLDER_DOC_NAME: &str = "folder_structure.md";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Repository,
    Folder,
    File,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Repository => "repository",
            Scope::Folder => "folder",
            Scope::File => "file",
        })
    }
}

/// One described item: a folder (repo doc), a file (folder doc) or a symbol
/// id (file doc).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocEntry {
    pub target: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureDoc {
    pub scope: Scope,
    pub target: String,
    /// Full markdown including the cache marker line.
    pub content: String,
    pub cache_key: u64,
    pub entries: Vec<DocEntry>,
}

impl StructureDoc {
    pub fn description_of(&self, target: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.target == target)
            .map(|e| e.description.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub generated: usize,
    pub disk_hits: usize,
    pub memory_hits: usize,
    pub corrupt: usize,
}

type Slot = Arc<Mutex<Option<StructureDoc>>>;

/// Check-then-generate cache: at most one generation per cache key, other
/// requesters block on the slot and reuse the winner's doc.
#[derive(Debug, Default)]
pub struct StructureCache {
    dir: Option<PathBuf>,
    slots: Mutex<HashMap<u64, Slot>>,
    generated: AtomicUsize,
    disk_hits: AtomicUsize,
    memory_hits: AtomicUsize,
    corrupt: AtomicUsize,
}

impl StructureCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Persists docs under `dir` (conventionally `<out>/structures`).
    pub fn on_disk(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            ..Self::default()
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            generated: self.generated.load(Ordering::Relaxed),
            disk_hits: self.disk_hits.load(Ordering::Relaxed),
            memory_hits: self.memory_hits.load(Ordering::Relaxed),
            corrupt: self.corrupt.load(Ordering::Relaxed),
        }
    }

    pub fn doc_path(&self, scope: Scope, target: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(doc_relative_path(scope, target)))
    }

    fn get_or_generate(
        &self,
        scope: Scope,
        target: &str,
        cache_key: u64,
        expected: &BTreeSet<String>,
        generate: impl FnOnce() -> Result<(String, Vec<DocEntry>), ProviderError>,
    ) -> Result<StructureDoc, ProviderError> {
        let slot = self
            .slots
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entry(cache_key)
            .or_default()
            .clone();
        let mut guard = slot.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(doc) = guard.as_ref() {
            self.memory_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(doc.clone());
        }
        let path = self.doc_path(scope, target);
        if let Some(p) = &path {
            if let Some(doc) = self.load(p, scope, target, cache_key, expected) {
                self.disk_hits.fetch_add(1, Ordering::Relaxed);
                *guard = Some(doc.clone());
                return Ok(doc);
            }
        }
        let (body, entries) = generate()?;
        let content = with_marker(cache_key, &body);
        if let Some(p) = &path {
            if let Err(e) = crate::fsio::write_atomic(p, content.as_bytes()) {
                tracing::warn!(path = %p.display(), error = %e, "could not persist structure doc");
            }
        }
        self.generated.fetch_add(1, Ordering::Relaxed);
        let doc = StructureDoc {
            scope,
            target: target.to_string(),
            content,
            cache_key,
            entries,
        };
        *guard = Some(doc.clone());
        Ok(doc)
    }

    fn load(
        &self,
        path: &Path,
        scope: Scope,
        target: &str,
        cache_key: u64,
        expected: &BTreeSet<String>,
    ) -> Option<StructureDoc> {
        let content = std::fs::read_to_string(path).ok()?;
        let (marker, body) = content.split_once('\n').unwrap_or((content.as_str(), ""));
        let parsed = parse_marker(marker);
        if parsed.is_some_and(|(key, _)| key != cache_key) {
            // stale, not corrupt
            return None;
        }
        let entries = parsed
            .filter(|(_, body_fp)| *body_fp == fnv1a(body.as_bytes()))
            .map(|_| parse_entries(scope, target, body))
            .filter(|entries| {
                entries
                    .iter()
                    .map(|e| e.target.clone())
                    .collect::<BTreeSet<_>>()
                    == *expected
            });
        match entries {
            Some(entries) => Some(StructureDoc {
                scope,
                target: target.to_string(),
                content,
                cache_key,
                entries,
            }),
            None => {
                self.corrupt.fetch_add(1, Ordering::Relaxed);
                tracing::warn!(path = %path.display(), "corrupted structure doc, regenerating");
                None
            }
        }
    }
}

/// Location of a doc relative to the structures directory.
pub fn doc_relative_path(scope: Scope, target: &str) -> PathBuf {
    match scope {
        Scope::Repository => PathBuf::from(REPO_DOC_NAME),
        Scope::Folder => Path::new(target).join(FOLDER_DOC_NAME),
        Scope::File => {
            let folder = parent_folder(target);
            Path::new(folder).join(file_doc_name(target))
        }
    }
}

/// `{stem}_{ext}_structure.md` for the file's base name.
pub fn file_doc_name(file: &str) -> String {
    let base = file.rsplit('/').next().unwrap_or(file);
    let (stem, ext) = match base.rfind('.') {
        Some(i) if i > 0 => (&base[..i], &base[i + 1..]),
        _ => (base, ""),
    };
    format!("{stem}_{ext}_structure.md")
}

fn with_marker(key: u64, body: &str) -> String {
    format!(
        "{MARKER_PREFIX}key={key:016x} content={:016x} -->\n{body}",
        fnv1a(body.as_bytes())
    )
}

fn parse_marker(line: &str) -> Option<(u64, u64)> {
    let rest = line.strip_prefix(MARKER_PREFIX)?.strip_suffix("-->")?;
    let mut key = None;
    let mut content = None;
    for part in rest.split_whitespace() {
        if let Some(v) = part.strip_prefix("key=") {
            key = u64::from_str_radix(v, 16).ok();
        } else if let Some(v) = part.strip_prefix("content=") {
            content = u64::from_str_radix(v, 16).ok();
        }
    }
    Some((key?, content?))
}

fn escape_cell(s: &str) -> String {
    one_line(s).replace('|', "\\|")
}

fn split_row(row: &str) -> Vec<String> {
    let inner = row.trim().trim_start_matches('|');
    let inner = inner.strip_suffix('|').unwrap_or(inner);
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut chars = inner.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' if chars.peek() == Some(&'|') => {
                cur.push('|');
                chars.next();
            }
            '|' => cells.push(std::mem::take(&mut cur).trim().to_string()),
            c => cur.push(c),
        }
    }
    cells.push(cur.trim().to_string());
    cells
}

fn display_folder(folder: &str) -> &str {
    if folder.is_empty() {
        "."
    } else {
        folder
    }
}

fn join_path(folder: &str, name: &str) -> String {
    if folder.is_empty() {
        name.to_string()
    } else {
        format!("{folder}/{name}")
    }
}

fn parse_bullet(line: &str) -> Option<(&str, &str)> {
    let rest = line.strip_prefix("- `")?;
    let (name, desc) = rest.split_once("`: ")?;
    Some((name, desc))
}

fn parse_entries(scope: Scope, target: &str, body: &str) -> Vec<DocEntry> {
    let mut out = Vec::new();
    match scope {
        Scope::Repository => {
            for (name, desc) in body.lines().filter_map(parse_bullet) {
                let folder = if name == "." { "" } else { name };
                out.push(DocEntry {
                    target: folder.to_string(),
                    description: desc.to_string(),
                });
            }
        }
        Scope::Folder => {
            for (name, desc) in body.lines().filter_map(parse_bullet) {
                out.push(DocEntry {
                    target: join_path(target, name),
                    description: desc.to_string(),
                });
            }
        }
        Scope::File => {
            for line in body.lines().filter(|l| l.starts_with("| `")) {
                let cells = split_row(line);
                if cells.len() != 4 {
                    continue;
                }
                let name = cells[0].trim_matches('`');
                let Some(kind) = SymbolKind::parse(&cells[1]) else {
                    continue;
                };
                let Some(start) = cells[2]
                    .split('-')
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                else {
                    continue;
                };
                out.push(DocEntry {
                    target: format!("{target}::{name}:{start}:{kind}"),
                    description: cells[3].clone(),
                });
            }
        }
    }
    out
}

/// Folders listed in the repository doc: every non-root folder, plus the
/// root when it directly holds files.
pub fn listed_folders(model: &RepoModel) -> Vec<String> {
    model
        .folders
        .iter()
        .filter(|f| !f.is_empty() || model.files_in_folder("").next().is_some())
        .cloned()
        .collect()
}

fn file_summary(model: &RepoModel, file: &str) -> String {
    match model.read_source(file) {
        Ok(text) => header_comment(&text).unwrap_or_default(),
        Err(e) => {
            tracing::warn!(file, error = %e, "cannot read source for summary");
            String::new()
        }
    }
}

fn key_for(scope: Scope, target: &str, sources: impl IntoIterator<Item = u64>) -> u64 {
    let mut k = combine_fingerprints(fnv1a(scope.to_string().as_bytes()), DOC_FORMAT);
    k = combine_fingerprints(k, fnv1a(target.as_bytes()));
    for s in sources {
        k = combine_fingerprints(k, s);
    }
    k
}

fn file_fingerprints<'a>(
    model: &'a RepoModel,
    files: impl IntoIterator<Item = &'a str>,
) -> Vec<u64> {
    files
        .into_iter()
        .flat_map(|f| [fnv1a(f.as_bytes()), model.files[f].content_hash])
        .collect()
}

fn descriptions_by(items: &[Value], key: &str) -> HashMap<String, String> {
    items
        .iter()
        .filter_map(|v| {
            let k = v.get(key)?.as_str()?;
            let d = v.get("description")?.as_str()?;
            Some((k.to_string(), one_line(d)))
        })
        .collect()
}

const NO_DESCRIPTION: &str = "(no description)";

/// Repository-level doc: one bullet per listed folder.
pub fn generate_repo_structure_doc(
    model: &RepoModel,
    provider: &Provider,
    cache: &StructureCache,
) -> Result<StructureDoc, ProviderError> {
    let folders = listed_folders(model);
    let key = key_for(
        Scope::Repository,
        "",
        folders
            .iter()
            .map(|f| fnv1a(f.as_bytes()))
            .chain(file_fingerprints(
                model,
                model.files.keys().map(String::as_str),
            )),
    );
    let expected: BTreeSet<String> = folders.iter().cloned().collect();
    cache.get_or_generate(Scope::Repository, "", key, &expected, || {
        let mut described: HashMap<String, String> = HashMap::new();
        for batch in folders.chunks(BATCH) {
            let items: Vec<Value> = batch
                .iter()
                .map(|folder| {
                    let files: Vec<Value> = model
                        .files_in_folder(folder)
                        .take(SAMPLE_FILES)
                        .map(|f| {
                            json!({
                                "name": f.rsplit('/').next().unwrap_or(f),
                                "summary": file_summary(model, f),
                            })
                        })
                        .collect();
                    let subs: Vec<&str> = model.subfolders(folder).collect();
                    json!({"folder": folder, "files": files, "subfolders": subs})
                })
                .collect();
            let req = payload_request(
                SYSTEM_PROMPT,
                "Describe the purpose of each repository folder in one line, based on its name and \
sampled files. Return a strict JSON array [{\"folder\": string, \"description\": string}].",
                &json!({"task": "describe_folders", "folders": items}),
            );
            let reply = complete_parsed(provider, Phase::StructureGen, &req, parse_json_array)?;
            described.extend(descriptions_by(&reply, "folder"));
        }
        let mut body = String::from("# Repository structure\n");
        if !folders.is_empty() {
            body.push('\n');
        }
        let mut entries = Vec::new();
        for f in &folders {
            let d = described
                .get(f)
                .filter(|d| !d.is_empty())
                .cloned()
                .unwrap_or_else(|| NO_DESCRIPTION.into());
            body.push_str(&format!("- `{}`: {}\n", display_folder(f), d));
            entries.push(DocEntry {
                target: f.clone(),
                description: d,
            });
        }
        Ok((body, entries))
    })
}

/// Folder-level doc: one bullet per file directly inside `folder`.
pub fn generate_folder_structure_doc(
    folder: &str,
    model: &RepoModel,
    provider: &Provider,
    cache: &StructureCache,
) -> Result<StructureDoc, ProviderError> {
    let files: Vec<&str> = model.files_in_folder(folder).collect();
    let key = key_for(
        Scope::Folder,
        folder,
        file_fingerprints(model, files.iter().copied()),
    );
    let expected: BTreeSet<String> = files.iter().map(|f| f.to_string()).collect();
    cache.get_or_generate(Scope::Folder, folder, key, &expected, || {
        let mut body = format!("# Folder `{}`\n\n", display_folder(folder));
        if files.is_empty() {
            body.push_str("_No files._\n");
            return Ok((body, Vec::new()));
        }
        let mut described = HashMap::new();
        for batch in files.chunks(BATCH) {
            let items: Vec<Value> = batch
                .iter()
                .map(|f| {
                    json!({
                        "name": f.rsplit('/').next().unwrap_or(f),
                        "summary": file_summary(model, f),
                    })
                })
                .collect();
            let req = payload_request(
                SYSTEM_PROMPT,
                "Describe each file's purpose and functionality in one line. \
Return a strict JSON array [{\"name\": string, \"description\": string}].",
                &json!({"task": "describe_files", "folder": folder, "files": items}),
            );
            let reply = complete_parsed(provider, Phase::StructureGen, &req, parse_json_array)?;
            described.extend(descriptions_by(&reply, "name"));
        }
        let mut entries = Vec::new();
        for f in &files {
            let name = f.rsplit('/').next().unwrap_or(f);
            let d = described
                .get(name)
                .filter(|d| !d.is_empty())
                .cloned()
                .unwrap_or_else(|| NO_DESCRIPTION.into());
            body.push_str(&format!("- `{name}`: {d}\n"));
            entries.push(DocEntry {
                target: f.to_string(),
                description: d,
            });
        }
        Ok((body, entries))
    })
}

/// File-level doc: a compact table of the file's symbols.
pub fn generate_file_structure_doc(
    file: &str,
    model: &RepoModel,
    provider: &Provider,
    cache: &StructureCache,
) -> Result<StructureDoc, ProviderError> {
    let symbols: Vec<&CodeSymbol> = model.symbols_of(file).collect();
    let content_hash = model.files.get(file).map_or(0, |i| i.content_hash);
    let key = key_for(
        Scope::File,
        file,
        std::iter::once(content_hash).chain(symbols.iter().map(|s| fnv1a(s.id().as_bytes()))),
    );
    let expected: BTreeSet<String> = symbols.iter().map(|s| s.id()).collect();
    cache.get_or_generate(Scope::File, file, key, &expected, || {
        let mut body = format!("# File `{file}`\n\n");
        if symbols.is_empty() {
            body.push_str("_No symbols._\n");
            return Ok((body, Vec::new()));
        }
        let text = model.read_source(file).unwrap_or_default();
        let summary = header_comment(&text).unwrap_or_default();
        let mut described = HashMap::new();
        for batch in symbols.chunks(BATCH * 2) {
            let items: Vec<Value> = batch
                .iter()
                .map(|s| {
                    json!({
                        "id": s.id(),
                        "name": s.name,
                        "kind": s.kind,
                        "lines": format!("{}-{}", s.line_start, s.line_end),
                        "signature": s.signature,
                        "comment": leading_comment(&text, s.line_start).unwrap_or_default(),
                    })
                })
                .collect();
            let req = payload_request(
                SYSTEM_PROMPT,
                "Give a one-line description of what each code element does. \
Return a strict JSON array [{\"id\": string, \"description\": string}].",
                &json!({"task": "describe_symbols", "file": file, "summary": summary, "symbols": items}),
            );
            let reply = complete_parsed(provider, Phase::StructureGen, &req, parse_json_array)?;
            described.extend(descriptions_by(&reply, "id"));
        }
        body.push_str("| Symbol | Kind | Lines | Description |\n|---|---|---|---|\n");
        let mut entries = Vec::new();
        for s in &symbols {
            let id = s.id();
            let d = described
                .get(&id)
                .filter(|d| !d.is_empty())
                .cloned()
                .unwrap_or_else(|| NO_DESCRIPTION.into());
            let d = one_line(&d);
            body.push_str(&format!(
                "| `{}` | {} | {}-{} | {} |\n",
                s.name,
                s.kind,
                s.line_start,
                s.line_end,
                escape_cell(&d)
            ));
            entries.push(DocEntry {
                target: id,
                description: d,
            });
        }
        Ok((body, entries))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repo::{extract_all_builtin, scan_repository, DEFAULT_EXTENSIONS, NO_GLOBS};

    fn write(root: &Path, rel: &str, text: &str) {
        let p = root.join(rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, text).unwrap();
    }

    fn repo() -> (tempfile::TempDir, RepoModel) {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "src/net/socket.c",
            "/* Socket layer: connect and send | receive. */\n\n/* Opens a socket. */\nint sock_open(void)\n{\n  return 0;\n}\n",
        );
        write(dir.path(), "src/net/empty.h", "\n");
        write(
            dir.path(),
            "src/util/log.c",
            "// Logging helpers.\nvoid log_line(const char *s) { }\n",
        );
        let mut m = scan_repository(dir.path(), DEFAULT_EXTENSIONS, NO_GLOBS).unwrap();
        extract_all_builtin(&mut m).unwrap();
        (dir, m)
    }

    #[test]
    fn file_doc_names() {
        assert_eq!(
            file_doc_name("service/nfc_service.c"),
            "nfc_service_c_structure.md"
        );
        assert_eq!(file_doc_name("a.b.h"), "a.b_h_structure.md");
        assert_eq!(
            doc_relative_path(Scope::File, "src/x.c"),
            PathBuf::from("src/x_c_structure.md")
        );
    }

    #[test]
    fn repo_doc_lists_folders_and_caches() {
        let (_d, m) = repo();
        let p = Provider::oracle();
        let cache = StructureCache::in_memory();
        let doc = generate_repo_structure_doc(&m, &p, &cache).unwrap();
        let targets: Vec<_> = doc.entries.iter().map(|e| e.target.as_str()).collect();
        assert_eq!(targets, ["src", "src/net", "src/util"]);
        assert!(doc.content.contains("- `src/net`: src/net: Socket layer"));
        let calls = p.ledger().snapshot().total_calls;
        let again = generate_repo_structure_doc(&m, &p, &cache).unwrap();
        assert_eq!(doc, again);
        assert_eq!(p.ledger().snapshot().total_calls, calls);
    }

    #[test]
    fn empty_repo_doc_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let m = scan_repository(dir.path(), DEFAULT_EXTENSIONS, NO_GLOBS).unwrap();
        let doc =
            generate_repo_structure_doc(&m, &Provider::oracle(), &StructureCache::in_memory())
                .unwrap();
        assert!(doc.entries.is_empty());
        assert!(doc.content.ends_with("# Repository structure\n"));
    }

    #[test]
    fn file_doc_without_symbols_makes_no_call() {
        let (_d, m) = repo();
        let p = Provider::oracle();
        let doc =
            generate_file_structure_doc("src/net/empty.h", &m, &p, &StructureCache::in_memory())
                .unwrap();
        assert!(doc.content.contains("_No symbols._"));
        assert_eq!(p.ledger().total(), 0);
    }

    #[test]
    fn disk_round_trip_and_corruption() {
        let (_d, m) = repo();
        let out = tempfile::tempdir().unwrap();
        let p = Provider::oracle();
        let first = generate_file_structure_doc(
            "src/net/socket.c",
            &m,
            &p,
            &StructureCache::on_disk(out.path()),
        )
        .unwrap();
        assert_eq!(first.entries[0].description, "Opens a socket.");
        let path = out.path().join("src/net/socket_c_structure.md");
        assert!(path.exists());

        let p2 = Provider::oracle();
        let cache2 = StructureCache::on_disk(out.path());
        let second = generate_file_structure_doc("src/net/socket.c", &m, &p2, &cache2).unwrap();
        assert_eq!(first, second);
        assert_eq!(p2.ledger().total(), 0);
        assert_eq!(cache2.stats().disk_hits, 1);

        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() - 10]).unwrap();
        let cache3 = StructureCache::on_disk(out.path());
        let third =
            generate_file_structure_doc("src/net/socket.c", &m, &Provider::oracle(), &cache3)
                .unwrap();
        assert_eq!(third, first);
        assert_eq!(cache3.stats().corrupt, 1);
        assert_eq!(cache3.stats().generated, 1);
    }

    #[test]
    fn pipes_survive_round_trip() {
        let body = "| `f` | function | 1-2 | a \\| b |";
        let e = parse_entries(Scope::File, "x.c", body);
        assert_eq!(e[0].description, "a | b");
        assert_eq!(e[0].target, "x.c::f:1:function");
    }

    #[test]
    fn folder_doc_entries() {
        let (_d, m) = repo();
        let doc = generate_folder_structure_doc(
            "src/net",
            &m,
            &Provider::oracle(),
            &StructureCache::in_memory(),
        )
        .unwrap();
        let t: Vec<_> = doc.entries.iter().map(|e| e.target.as_str()).collect();
        assert_eq!(t, ["src/net/empty.h", "src/net/socket.c"]);
        assert_eq!(doc.entries[0].description, "source file empty.h");
        let empty = generate_folder_structure_doc(
            "src",
            &m,
            &Provider::oracle(),
            &StructureCache::in_memory(),
        )
        .unwrap();
        assert!(empty.entries.is_empty());
    }
}
