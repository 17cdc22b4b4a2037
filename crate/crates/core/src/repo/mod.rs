//! Repository model: folders, files and typed code symbols.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};

use crate::error::RepoError;
use crate::text::fnv1a;

pub mod clex;
pub mod structure;
pub mod tags;

pub const DEFAULT_EXTENSIONS: &[&str] = &["c", "h", "cc", "cpp", "cxx", "hh", "hpp", "hxx"];

/// Empty exclude list, for callers that exclude nothing.
pub const NO_GLOBS: &[&str] = &[];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Function,
    Macro,
    Struct,
    Constant,
    Enum,
    Typedef,
}

impl SymbolKind {
    pub const ALL: [SymbolKind; 6] = [
        SymbolKind::Function,
        SymbolKind::Macro,
        SymbolKind::Struct,
        SymbolKind::Constant,
        SymbolKind::Enum,
        SymbolKind::Typedef,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SymbolKind::Function => "function",
            SymbolKind::Macro => "macro",
            SymbolKind::Struct => "struct",
            SymbolKind::Constant => "constant",
            SymbolKind::Enum => "enum",
            SymbolKind::Typedef => "typedef",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSymbol {
    pub name: String,
    pub kind: SymbolKind,
    pub file: String,
    pub line_start: usize,
    pub line_end: usize,
    pub signature: String,
    /// Prototype without a body. Not a mapping candidate by default.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub declaration: bool,
}

impl CodeSymbol {
    /// Stable identifier, unique within a model.
    pub fn id(&self) -> String {
        format!(
            "{}::{}:{}:{}",
            self.file, self.name, self.line_start, self.kind
        )
    }

    fn key(&self) -> (String, SymbolKind, String, usize) {
        (
            self.name.clone(),
            self.kind,
            self.file.clone(),
            self.line_start,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileInfo {
    pub content_hash: u64,
    pub line_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RepoModel {
    pub root: PathBuf,
    /// Repo-relative folders; `""` is the root.
    pub folders: BTreeSet<String>,
    pub files: BTreeMap<String, FileInfo>,
    pub symbols: Vec<CodeSymbol>,
    pub symbol_by_file: BTreeMap<String, Vec<usize>>,
}

/// Parent folder of a repo-relative path (`""` for top-level entries).
pub fn parent_folder(path: &str) -> &str {
    path.rfind('/').map_or("", |i| &path[..i])
}

/// True when `ancestor` is a proper ancestor folder of `path`.
pub fn is_ancestor(ancestor: &str, path: &str) -> bool {
    if ancestor == path {
        return false;
    }
    ancestor.is_empty()
        || path
            .strip_prefix(ancestor)
            .is_some_and(|r| r.starts_with('/'))
}

/// Normalizes separators and removes `.`, `..` and trailing slashes.
pub fn normalize_path(path: &str) -> String {
    let mut parts: Vec<&str> = Vec::new();
    for comp in path.split(['/', '\\']) {
        match comp {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            c => parts.push(c),
        }
    }
    parts.join("/")
}

impl RepoModel {
    pub fn empty(root: impl Into<PathBuf>) -> Self {
        let mut folders = BTreeSet::new();
        folders.insert(String::new());
        Self {
            root: root.into(),
            folders,
            ..Default::default()
        }
    }

    pub fn has_file(&self, path: &str) -> bool {
        self.files.contains_key(path)
    }

    /// Files directly inside `folder`.
    pub fn files_in_folder<'a>(&'a self, folder: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.files
            .keys()
            .map(String::as_str)
            .filter(move |f| parent_folder(f) == folder)
    }

    pub fn subfolders<'a>(&'a self, folder: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.folders
            .iter()
            .map(String::as_str)
            .filter(move |f| !f.is_empty() && parent_folder(f) == folder)
    }

    pub fn symbols_of<'a>(&'a self, file: &str) -> impl Iterator<Item = &'a CodeSymbol> + 'a {
        self.symbol_by_file
            .get(file)
            .into_iter()
            .flatten()
            .map(|&i| &self.symbols[i])
    }

    pub fn find_symbol(&self, id: &str) -> Option<&CodeSymbol> {
        self.symbols.iter().find(|s| s.id() == id)
    }

    pub fn read_source(&self, file: &str) -> std::io::Result<String> {
        let bytes = std::fs::read(self.root.join(file))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    /// Adds symbols, dropping duplicates and anything that violates the
    /// containment invariant. Returns how many were added.
    pub fn add_symbols(&mut self, symbols: impl IntoIterator<Item = CodeSymbol>) -> usize {
        let mut seen: BTreeSet<_> = self.symbols.iter().map(CodeSymbol::key).collect();
        let mut added = 0;
        for mut sym in symbols {
            let Some(info) = self.files.get(&sym.file) else {
                tracing::warn!(file = %sym.file, name = %sym.name, "symbol outside scanned files");
                continue;
            };
            sym.line_start = sym.line_start.max(1);
            sym.line_end = sym
                .line_end
                .clamp(sym.line_start, info.line_count.max(sym.line_start));
            if !seen.insert(sym.key()) {
                continue;
            }
            self.symbols.push(sym);
            added += 1;
        }
        self.reindex();
        added
    }

    fn reindex(&mut self) {
        self.symbols.sort_by(|a, b| {
            (&a.file, a.line_start, a.kind, &a.name).cmp(&(&b.file, b.line_start, b.kind, &b.name))
        });
        self.symbol_by_file.clear();
        for (i, s) in self.symbols.iter().enumerate() {
            self.symbol_by_file
                .entry(s.file.clone())
                .or_default()
                .push(i);
        }
    }
}

fn build_globset<G: AsRef<str>>(patterns: &[G]) -> Result<GlobSet, RepoError> {
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        let p = p.as_ref();
        let g = Glob::new(p).map_err(|e| RepoError::BadGlob {
            pattern: p.to_string(),
            reason: e.to_string(),
        })?;
        b.add(g);
    }
    b.build().map_err(|e| RepoError::BadGlob {
        pattern: patterns
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(","),
        reason: e.to_string(),
    })
}

fn map_walk_err(err: walkdir::Error, root: &Path) -> RepoError {
    let path = err.path().unwrap_or(root).to_path_buf();
    match err.io_error().map(std::io::Error::kind) {
        Some(std::io::ErrorKind::PermissionDenied) => RepoError::PermissionDenied(path),
        Some(std::io::ErrorKind::NotFound) => RepoError::RootNotFound(path),
        _ => RepoError::Io {
            path,
            source: err
                .into_io_error()
                .unwrap_or_else(|| std::io::Error::other("walk error")),
        },
    }
}

/// Walks `root` collecting source files and the folders that hold them.
/// Hidden entries are skipped. Symbols are left empty.
pub fn scan_repository<E: AsRef<str>, G: AsRef<str>>(
    root: &Path,
    include_extensions: &[E],
    exclude_globs: &[G],
) -> Result<RepoModel, RepoError> {
    if !root.is_dir() {
        return Err(RepoError::RootNotFound(root.to_path_buf()));
    }
    let root = root
        .canonicalize()
        .map_err(|_| RepoError::RootNotFound(root.to_path_buf()))?;
    let excludes = build_globset(exclude_globs)?;
    let exts: BTreeSet<String> = include_extensions
        .iter()
        .map(|e| e.as_ref().trim_start_matches('.').to_ascii_lowercase())
        .collect();

    let mut model = RepoModel::empty(root.clone());
    let walker = walkdir::WalkDir::new(&root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            if e.depth() == 0 {
                return true;
            }
            if e.file_name().to_string_lossy().starts_with('.') {
                return false;
            }
            let rel = e.path().strip_prefix(&root).unwrap_or(e.path());
            let rel = normalize_path(&rel.to_string_lossy());
            let dir_probe = format!("{rel}/_");
            !(excludes.is_match(&rel) || (e.file_type().is_dir() && excludes.is_match(&dir_probe)))
        });
    for entry in walker {
        let entry = entry.map_err(|e| map_walk_err(e, &root))?;
        if entry.depth() == 0 {
            continue;
        }
        let rel = entry.path().strip_prefix(&root).unwrap_or(entry.path());
        let rel = normalize_path(&rel.to_string_lossy());
        if entry.file_type().is_dir() {
            model.folders.insert(rel);
            continue;
        }
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = entry
            .path()
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase());
        if !ext.is_some_and(|e| exts.contains(&e)) {
            continue;
        }
        let bytes = std::fs::read(entry.path()).map_err(|source| match source.kind() {
            std::io::ErrorKind::PermissionDenied => {
                RepoError::PermissionDenied(entry.path().to_path_buf())
            }
            _ => RepoError::Io {
                path: entry.path().to_path_buf(),
                source,
            },
        })?;
        let line_count = String::from_utf8_lossy(&bytes).lines().count();
        model.files.insert(
            rel,
            FileInfo {
                content_hash: fnv1a(&bytes),
                line_count,
            },
        );
    }
    // folders without any source file below them are not mapping targets
    let mut keep: BTreeSet<String> = BTreeSet::from([String::new()]);
    for file in model.files.keys() {
        let mut dir = parent_folder(file);
        while !dir.is_empty() && keep.insert(dir.to_string()) {
            dir = parent_folder(dir);
        }
    }
    model.folders.retain(|f| keep.contains(f));
    Ok(model)
}

/// Runs the builtin extractor over every file of the model.
pub fn extract_all_builtin(model: &mut RepoModel) -> Result<Vec<String>, RepoError> {
    let mut symbols = Vec::new();
    let mut warnings = Vec::new();
    let files: Vec<String> = model.files.keys().cloned().collect();
    for file in files {
        let text = model.read_source(&file).map_err(|source| RepoError::Io {
            path: model.root.join(&file),
            source,
        })?;
        let ex = clex::extract_symbols_builtin(&file, &text);
        warnings.extend(ex.warnings.into_iter().map(|w| format!("{file}: {w}")));
        symbols.extend(ex.symbols);
    }
    model.add_symbols(symbols);
    Ok(warnings)
}
