#![allow(dead_code)]

use std::path::{Path, PathBuf};

use spectrace::baselines::{
    build_hybrid_index, run_grep_baseline, run_hybrid_baseline, symbol_descriptions, BaselineRun,
    ChunkConfig, HybridWeights,
};
use spectrace::embed::HashEmbedder;
use spectrace::eval::GroundTruth;
use spectrace::pipeline::PipelineRun;
use spectrace::repo::structure::StructureCache;
use spectrace::repo::{extract_all_builtin, scan_repository, DEFAULT_EXTENSIONS};
use spectrace::spec_corpus::parse_spec_file;
use spectrace::{run_pipeline, PipelineConfig, Provider, RepoModel, SpecDocument};

/// Retrieval depth used on the fixture: the repository is ~30 files, so
/// both baselines return three items per section.
pub const FIXTURE_GREP_K: usize = 3;
pub const FIXTURE_FINAL_K: usize = 3;
pub const FIXTURE_EXCLUDES: &[&str] = &["**/build/**"];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn nfc_spec() -> SpecDocument {
    parse_spec_file(&fixtures().join("nfc_spec.md")).unwrap()
}

pub fn nfc_model() -> RepoModel {
    let mut m = scan_repository(
        &fixtures().join("nfc_repo"),
        DEFAULT_EXTENSIONS,
        FIXTURE_EXCLUDES,
    )
    .unwrap();
    let warnings = extract_all_builtin(&mut m).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    m
}

pub fn nfc_ground_truth() -> GroundTruth {
    GroundTruth::load(&fixtures().join("nfc_ground_truth.json")).unwrap()
}

pub fn pipeline(spec: &SpecDocument, model: &RepoModel, workers: usize) -> PipelineRun {
    let provider = Provider::oracle();
    let cache = StructureCache::in_memory();
    let cfg = PipelineConfig {
        workers,
        ..Default::default()
    };
    run_pipeline(spec, model, &provider, &cache, &cfg).unwrap()
}

pub fn grep(spec: &SpecDocument, model: &RepoModel) -> BaselineRun {
    run_grep_baseline(spec, model, FIXTURE_GREP_K)
}

pub fn hybrid(spec: &SpecDocument, model: &RepoModel) -> BaselineRun {
    let provider = Provider::oracle();
    let cache = StructureCache::in_memory();
    let descs = symbol_descriptions(model, &provider, &cache).unwrap();
    let emb = HashEmbedder::default();
    let index = build_hybrid_index(model, &descs, &emb).unwrap();
    let weights = HybridWeights {
        final_k: FIXTURE_FINAL_K,
        ..Default::default()
    };
    run_hybrid_baseline(spec, &index, &emb, &weights, &ChunkConfig::default()).unwrap()
}
