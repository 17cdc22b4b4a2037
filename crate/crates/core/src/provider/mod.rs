//! Semantic judgments behind one interface. Backends turn a prompt into
//! text; [`Provider`] adds retries, an in-flight limit, token accounting
//! and optional transcript recording.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ProviderError;
use crate::text::estimate_tokens;

pub mod http;
pub mod judge;
pub mod oracle;
pub mod transcript;

pub use judge::{judge_relevance, Candidate, RelevanceJudgment};
pub use oracle::{oracle_judge, OracleBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    StructureGen,
    FolderDiscovery,
    FileDiscovery,
    SymbolDiscovery,
    Validation,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::StructureGen,
        Phase::FolderDiscovery,
        Phase::FileDiscovery,
        Phase::SymbolDiscovery,
        Phase::Validation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::StructureGen => "structure_gen",
            Phase::FolderDiscovery => "folder_discovery",
            Phase::FileDiscovery => "file_discovery",
            Phase::SymbolDiscovery => "symbol_discovery",
            Phase::Validation => "validation",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2048;

impl ProviderRequest {
    pub fn new(system_prompt: impl Into<String>, user_prompt: impl Into<String>) -> Self {
        Self {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            temperature: 0.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.system_prompt.trim().is_empty() || self.user_prompt.trim().is_empty() {
            return Err(ProviderError::InvalidRequest(
                "prompts must be non-empty".into(),
            ));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Stable 64-bit fingerprint used to key transcript replay.
    pub fn fingerprint(&self) -> u64 {
        let mut h = crate::text::fnv1a(self.system_prompt.as_bytes());
        h = crate::text::combine_fingerprints(h, crate::text::fnv1a(self.user_prompt.as_bytes()));
        h = crate::text::combine_fingerprints(h, self.temperature.to_bits());
        crate::text::combine_fingerprints(h, u64::from(self.max_output_tokens))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    #[serde(default)]
    pub estimated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendReply {
    pub text: String,
    pub usage: Option<Usage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub estimated: bool,
}

pub trait Backend: Send + Sync {
    fn complete(&self, request: &ProviderRequest) -> Result<BackendReply, ProviderError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub calls: u64,
}

impl PhaseUsage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub phase: Phase,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub phases: BTreeMap<Phase, PhaseUsage>,
    pub total_tokens: u64,
    pub total_calls: u64,
    pub estimated: bool,
}

#[derive(Debug, Default)]
struct LedgerState {
    phases: BTreeMap<Phase, PhaseUsage>,
    calls: Vec<CallRecord>,
    estimated: bool,
}

/// Per-phase token accounting, safe for concurrent accumulation.
#[derive(Debug, Default)]
pub struct TokenLedger {
    state: Mutex<LedgerState>,
}

impl TokenLedger {
    pub fn record(
        &self,
        phase: Phase,
        prompt_tokens: u64,
        completion_tokens: u64,
        estimated: bool,
    ) {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let entry = st.phases.entry(phase).or_default();
        entry.prompt_tokens += prompt_tokens;
        entry.completion_tokens += completion_tokens;
        entry.calls += 1;
        st.estimated |= estimated;
        st.calls.push(CallRecord {
            phase,
            prompt_tokens,
            completion_tokens,
        });
    }

    pub fn total(&self) -> u64 {
        self.snapshot().total_tokens
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.state
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .calls
            .clone()
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        let st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let mut phases = BTreeMap::new();
        for p in Phase::ALL {
            phases.insert(p, st.phases.get(&p).copied().unwrap_or_default());
        }
        LedgerSnapshot {
            total_tokens: phases.values().map(PhaseUsage::total).sum(),
            total_calls: phases.values().map(|u| u.calls).sum(),
            phases,
            estimated: st.estimated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based): base * 2^(retry-1).
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(retry.saturating_sub(1))
    }
}

/// Counting gate bounding concurrent backend calls.
#[derive(Debug)]
struct InFlight {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn new(limit: usize) -> Self {
        Self {
            limit: limit.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        InFlightGuard { gate: self }
    }
}

struct InFlightGuard<'a> {
    gate: &'a InFlight,
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.gate.active.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.gate.freed.notify_one();
    }
}

pub const DEFAULT_IN_FLIGHT: usize = 4;

pub struct Provider {
    backend: Box<dyn Backend>,
    ledger: TokenLedger,
    transcript: Option<transcript::TranscriptWriter>,
    gate: InFlight,
    retry: RetryPolicy,
}

impl fmt::Debug for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Provider")
            .field("retry", &self.retry)
            .field("in_flight_limit", &self.gate.limit)
            .finish_non_exhaustive()
    }
}

impl Provider {
    pub fn new(backend: impl Backend + 'static) -> Self {
        Self {
            backend: Box::new(backend),
            ledger: TokenLedger::default(),
            transcript: None,
            gate: InFlight::new(DEFAULT_IN_FLIGHT),
            retry: RetryPolicy::default(),
        }
    }

    pub fn oracle() -> Self {
        Self::new(OracleBackend)
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_in_flight_limit(mut self, limit: usize) -> Self {
        self.gate = InFlight::new(limit);
        self
    }

    pub fn record_to(mut self, path: &Path) -> std::io::Result<Self> {
        self.transcript = Some(transcript::TranscriptWriter::create(path)?);
        Ok(self)
    }

    pub fn ledger(&self) -> &TokenLedger {
        &self.ledger
    }

    pub fn complete(
        &self,
        phase: Phase,
        request: &ProviderRequest,
    ) -> Result<ProviderResponse, ProviderError> {
        request.validate()?;
        let reply = {
            let _slot = self.gate.acquire();
            self.call_with_retry(request)?
        };
        let usage = reply.usage.unwrap_or_else(|| Usage {
            prompt_tokens: estimate_tokens(&request.system_prompt)
                + estimate_tokens(&request.user_prompt),
            completion_tokens: estimate_tokens(&reply.text),
            estimated: true,
        });
        self.ledger.record(
            phase,
            usage.prompt_tokens,
            usage.completion_tokens,
            usage.estimated,
        );
        if let Some(t) = &self.transcript {
            t.append(phase, request, &reply.text, usage)
                .map_err(|e| ProviderError::Failure(format!("transcript write failed: {e}")))?;
        }
        Ok(ProviderResponse {
            text: reply.text,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
            estimated: usage.estimated,
        })
    }

    fn call_with_retry(&self, request: &ProviderRequest) -> Result<BackendReply, ProviderError> {
        let attempts = self.retry.attempts.max(1);
        let mut last = None;
        for attempt in 1..=attempts {
            match self.backend.complete(request) {
                Ok(r) => return Ok(r),
                Err(ProviderError::Failure(msg)) => {
                    tracing::warn!(attempt, attempts, %msg, "provider call failed");
                    last = Some(msg);
                    if attempt < attempts {
                        std::thread::sleep(self.retry.delay(attempt));
                    }
                }
                Err(other) => return Err(other),
            }
        }
        Err(ProviderError::Failure(format!(
            "gave up after {attempts} attempts: {}",
            last.unwrap_or_default()
        )))
    }
}
