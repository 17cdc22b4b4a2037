use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("document contains no headings")]
    EmptyDocument,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("embedding failed: {0}")]
    Failure(String),
}

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("repository root not found: {0}")]
    RootNotFound(PathBuf),
    #[error("permission denied: {0}")]
    PermissionDenied(PathBuf),
    #[error("invalid exclude glob {pattern:?}: {reason}")]
    BadGlob { pattern: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A tags line that could not be ingested. Collected, not fatal.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("malformed tag line {line}: {reason}")]
pub struct MalformedTagLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    #[error("provider failure: {0}")]
    Failure(String),
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("unparseable provider response: {0}")]
    Unparseable(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no recorded response for request (fingerprint {0:016x})")]
    ReplayMiss(u64),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("repository documentation failed: {0}")]
    RepoDoc(#[source] ProviderError),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("index is empty")]
    EmptyIndex,
    #[error("chunk has no embedding")]
    MissingEmbedding,
    #[error("invalid hybrid weights: {0}")]
    Weights(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("missing ground truth for section {0}")]
    MissingGroundTruth(String),
    #[error("ground truth lists section {0} more than once")]
    DuplicateSection(String),
    #[error("ground truth section {0} is not in the specification")]
    UnknownSection(String),
    #[error("cannot read ground truth {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("malformed ground truth: {0}")]
    Malformed(String),
}
