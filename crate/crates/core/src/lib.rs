//! Traceability from natural-language specifications to C/C++ code.
//!
//! The hierarchical pipeline narrows a repository folder → file → symbol
//! with a semantic provider at each step, then validates the result in
//! section order. Two retrieval baselines and an evaluator sit alongside.

pub mod baselines;
pub mod embed;
pub mod error;
pub mod eval;
pub mod fsio;
pub mod pipeline;
pub mod provider;
pub mod repo;
pub mod spec_corpus;
pub mod text;

pub use error::{BaselineError, EvalError, PipelineError, ProviderError, RepoError, SpecError};
pub use pipeline::{run_pipeline, PipelineConfig, SectionTrace, Status};
pub use provider::{Phase, Provider};
pub use repo::{CodeSymbol, RepoModel, SymbolKind};
pub use spec_corpus::{SpecDocument, SpecSection};
