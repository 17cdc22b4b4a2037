//! Persisted runs: one JSON document per command invocation.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use spectrace::provider::LedgerSnapshot;
use spectrace::text::fnv1a;
use spectrace::SectionTrace;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    /// `hier`, `grep` or `hybrid`.
    pub method: String,
    pub tool_version: String,
    /// Effective configuration with every default filled in.
    pub config: serde_json::Value,
    pub traces: Vec<SectionTrace>,
    /// Provider usage during the run. Grep never calls a provider and
    /// reports an all-zero ledger.
    pub ledger: LedgerSnapshot,
    pub runtime_seconds: f64,
    /// Provider transcript written alongside the record.
    pub transcript: Option<PathBuf>,
}

/// Low 32 bits folded from the FNV hash of the snapshot's JSON text.
pub fn config_hash(snapshot: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(snapshot).expect("value serializes");
    let h = fnv1a(&bytes);
    format!("{:08x}", (h ^ (h >> 32)) as u32)
}

/// UTC timestamp (sortable, millisecond resolution) plus the config hash.
pub fn new_run_id(snapshot: &serde_json::Value) -> String {
    let ts = chrono::Utc::now()
        .format("%Y%m%dT%H%M%S%.3fZ")
        .to_string()
        .replace('.', "");
    format!("{ts}-{}", config_hash(snapshot))
}

impl RunRecord {
    pub fn file_name(&self) -> String {
        format!("{}-{}.json", self.run_id, self.method)
    }

    pub fn traces_json(&self) -> String {
        serde_json::to_string_pretty(&self.traces).expect("traces serialize")
    }

    pub fn save(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(self.file_name());
        let json = serde_json::to_vec_pretty(self)?;
        spectrace::fsio::write_atomic(&path, &json)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing run record {}", path.display()))
    }
}
