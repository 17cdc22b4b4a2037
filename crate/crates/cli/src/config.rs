//! Run configuration: one JSON document, `${VAR}` interpolated from the
//! environment, relative paths resolved against the config file's folder.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spectrace::baselines::{ChunkConfig, HybridWeights, DEFAULT_GREP_K};
use spectrace::provider::http::HttpConfig;
use spectrace::repo::DEFAULT_EXTENSIONS;
use spectrace::PipelineConfig;

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Http,
    Oracle,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    /// Recorded transcript to serve from (replay only).
    #[serde(default)]
    pub transcript_path: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    120
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Oracle,
            endpoint: None,
            model: None,
            transcript_path: None,
            timeout_secs: default_timeout(),
        }
    }
}

impl ProviderConfig {
    pub fn http(&self) -> Option<HttpConfig> {
        Some(HttpConfig {
            endpoint: self.endpoint.clone()?,
            model: self.model.clone()?,
            timeout_secs: self.timeout_secs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub grep_k: usize,
    pub hybrid: HybridWeights,
    pub chunking: ChunkConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            grep_k: DEFAULT_GREP_K,
            hybrid: HybridWeights::default(),
            chunking: ChunkConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub repo_root: PathBuf,
    pub spec_path: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub provider: ProviderConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    /// Universal-ctags JSON output; the builtin lexer is used when absent.
    #[serde(default)]
    pub tags_source: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub worker_limit: usize,
    #[serde(default = "default_extensions")]
    pub include_extensions: Vec<String>,
    #[serde(default)]
    pub exclude_globs: Vec<String>,
}

fn default_workers() -> usize {
    PipelineConfig::default().workers
}

fn default_extensions() -> Vec<String> {
    DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect()
}

/// Replaces `${NAME}` with the environment value, JSON-escaped so secrets
/// with quotes survive. `$$` is a literal dollar.
pub fn interpolate_env(
    text: &str,
    lookup: impl Fn(&str) -> Option<String>,
) -> Result<String, UsageError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('$') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        if let Some(tail) = after.strip_prefix('$') {
            out.push('$');
            rest = tail;
        } else if let Some(body) = after.strip_prefix('{') {
            let end = body
                .find('}')
                .ok_or_else(|| UsageError("unterminated ${ in config".into()))?;
            let name = &body[..end];
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(UsageError(format!("bad variable name `{name}` in config")));
            }
            let value = lookup(name)
                .ok_or_else(|| UsageError(format!("environment variable {name} is not set")))?;
            let escaped = serde_json::to_string(&value).expect("string serializes");
            out.push_str(&escaped[1..escaped.len() - 1]);
            rest = &body[end + 1..];
        } else {
            out.push('$');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Canonical form of a path that may not exist yet: the deepest existing
/// ancestor is canonicalized and the rest appended.
fn canonical_lenient(p: &Path) -> PathBuf {
    let mut missing = Vec::new();
    let mut cur = p.to_path_buf();
    loop {
        if let Ok(c) = cur.canonicalize() {
            return missing
                .iter()
                .rev()
                .fold(c, |acc: PathBuf, part| acc.join(part));
        }
        match (cur.file_name().map(|n| n.to_os_string()), cur.parent()) {
            (Some(name), Some(parent)) => {
                missing.push(name);
                cur = parent.to_path_buf();
            }
            _ => return p.to_path_buf(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, UsageError> {
        let text = interpolate_env(text, |k| std::env::var(k).ok())?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| UsageError(format!("config: {e}")))?;
        cfg.repo_root = resolve(base_dir, &cfg.repo_root);
        cfg.spec_path = resolve(base_dir, &cfg.spec_path);
        cfg.output_dir = resolve(base_dir, &cfg.output_dir);
        cfg.tags_source = cfg.tags_source.map(|p| resolve(base_dir, &p));
        cfg.provider.transcript_path = cfg.provider.transcript_path.map(|p| resolve(base_dir, &p));
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Checks everything a command needs before any work starts and
    /// materializes the effective configuration: paths are canonical and
    /// `worker_limit` drives the pipeline's worker count.
    pub fn effective(mut self, needs_spec: bool) -> Result<Self, UsageError> {
        if self.worker_limit == 0 {
            return Err(UsageError("worker_limit must be >= 1".into()));
        }
        self.pipeline.workers = self.worker_limit;
        self.pipeline
            .validate()
            .map_err(|e| UsageError(e.to_string()))?;
        self.baseline
            .hybrid
            .validate()
            .map_err(|e| UsageError(e.to_string()))?;
        if self.baseline.grep_k == 0 {
            return Err(UsageError("baseline.grep_k must be >= 1".into()));
        }
        if !self.repo_root.is_dir() {
            return Err(UsageError(format!(
                "repo_root {} is not a directory",
                self.repo_root.display()
            )));
        }
        self.repo_root = canonical_lenient(&self.repo_root);
        if needs_spec {
            if !self.spec_path.is_file() {
                return Err(UsageError(format!(
                    "spec_path {} does not exist",
                    self.spec_path.display()
                )));
            }
            self.spec_path = canonical_lenient(&self.spec_path);
        }
        self.output_dir = canonical_lenient(&self.output_dir);
        if self.output_dir.starts_with(&self.repo_root) {
            return Err(UsageError(format!(
                "output_dir {} lies inside repo_root; refusing to write there",
                self.output_dir.display()
            )));
        }
        if let Some(t) = &self.tags_source {
            if !t.is_file() {
                return Err(UsageError(format!(
                    "tags_source {} does not exist",
                    t.display()
                )));
            }
        }
        match self.provider.kind {
            ProviderKind::Oracle => {}
            ProviderKind::Http => {
                if self.provider.http().is_none() {
                    return Err(UsageError("http provider needs endpoint and model".into()));
                }
            }
            ProviderKind::Replay => match &self.provider.transcript_path {
                Some(p) if p.is_file() => {}
                Some(p) => {
                    return Err(UsageError(format!(
                        "transcript {} does not exist",
                        p.display()
                    )))
                }
                None => return Err(UsageError("replay provider needs transcript_path".into())),
            },
        }
        Ok(self)
    }

    /// The snapshot stored in run records.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
