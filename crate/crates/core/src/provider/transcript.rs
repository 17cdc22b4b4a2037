//! JSON-lines transcripts of provider traffic, and a backend that replays
//! them for offline reruns.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendReply, Phase, ProviderRequest, Usage};
use crate::error::ProviderError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub phase: Phase,
    /// Hex fingerprint of the request, the replay key.
    pub fingerprint: String,
    pub request: ProviderRequest,
    pub response: String,
    pub usage: Usage,
}

#[derive(Debug)]
pub struct TranscriptWriter {
    out: Mutex<BufWriter<File>>,
}

impl TranscriptWriter {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self {
            out: Mutex::new(BufWriter::new(File::create(path)?)),
        })
    }

    pub fn append(
        &self,
        phase: Phase,
        request: &ProviderRequest,
        response: &str,
        usage: Usage,
    ) -> std::io::Result<()> {
        let entry = TranscriptEntry {
            phase,
            fingerprint: format!("{:016x}", request.fingerprint()),
            request: request.clone(),
            response: response.to_string(),
            usage,
        };
        let line = serde_json::to_string(&entry)?;
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        writeln!(out, "{line}")?;
        out.flush()
    }
}

pub fn read_transcript(path: &Path) -> std::io::Result<Vec<TranscriptEntry>> {
    let reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: TranscriptEntry = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        entries.push(e);
    }
    Ok(entries)
}

/// Serves recorded responses keyed by request fingerprint. Repeated
/// identical requests are answered in recording order.
#[derive(Debug)]
pub struct ReplayBackend {
    responses: Mutex<HashMap<u64, VecDeque<(String, Usage)>>>,
}

impl ReplayBackend {
    pub fn from_entries(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        let mut map: HashMap<u64, VecDeque<(String, Usage)>> = HashMap::new();
        for e in entries {
            map.entry(e.request.fingerprint())
                .or_default()
                .push_back((e.response, e.usage));
        }
        Self {
            responses: Mutex::new(map),
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::from_entries(read_transcript(path)?))
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, request: &ProviderRequest) -> Result<BackendReply, ProviderError> {
        let fp = request.fingerprint();
        let mut map = self.responses.lock().unwrap_or_else(|e| e.into_inner());
        let queue = map.get_mut(&fp).ok_or(ProviderError::ReplayMiss(fp))?;
        // keep the last answer around so cache-free reruns still resolve
        let (text, usage) = if queue.len() > 1 {
            queue.pop_front()
        } else {
            queue.front().cloned()
        }
        .ok_or(ProviderError::ReplayMiss(fp))?;
        Ok(BackendReply {
            text,
            usage: Some(usage),
        })
    }
}
