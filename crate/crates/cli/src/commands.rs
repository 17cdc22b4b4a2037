//! The four subcommands. Each takes an effective [`RunConfig`] and writes
//! only under its `output_dir`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use spectrace::baselines::hybrid::expected_fingerprint;
use spectrace::baselines::{
    build_hybrid_index, run_grep_baseline, run_hybrid_baseline, symbol_descriptions,
    BaselineMethod, HybridIndex,
};
use spectrace::embed::{Embedder, HashEmbedder};
use spectrace::eval::{compare_methods, gap_report, EvalReport, GroundTruth, MethodRun};
use spectrace::provider::http::HttpBackend;
use spectrace::provider::transcript::ReplayBackend;
use spectrace::provider::LedgerSnapshot;
use spectrace::repo::structure::{
    generate_file_structure_doc, generate_folder_structure_doc, generate_repo_structure_doc,
    listed_folders, CacheStats, StructureCache,
};
use spectrace::repo::tags::ingest_tags_stream;
use spectrace::repo::{extract_all_builtin, scan_repository};
use spectrace::spec_corpus::parse_spec_file;
use spectrace::{run_pipeline, Provider, RepoModel, SpecDocument};

use crate::config::{ProviderKind, RunConfig};
use crate::record::{new_run_id, RunRecord, TOOL_VERSION};
use crate::UsageError;

pub const STRUCTURES_DIR: &str = "structures";
pub const INDEX_DIR: &str = "index";
pub const RUNS_DIR: &str = "runs";
pub const EVAL_DIR: &str = "eval";
pub const INDEX_REPORT: &str = "index_report.json";
pub const HYBRID_SNAPSHOT: &str = "hybrid_index.json";

pub fn structure_cache(cfg: &RunConfig) -> StructureCache {
    StructureCache::on_disk(cfg.output_dir.join(STRUCTURES_DIR))
}

/// Scans the repository and fills in symbols from the tags file when one
/// is configured, otherwise from the builtin lexer. Returns warnings.
pub fn build_model(cfg: &RunConfig) -> anyhow::Result<(RepoModel, Vec<String>)> {
    let mut model = scan_repository(&cfg.repo_root, &cfg.include_extensions, &cfg.exclude_globs)
        .with_context(|| format!("scanning {}", cfg.repo_root.display()))?;
    let warnings = match &cfg.tags_source {
        Some(tags) => {
            let f = File::open(tags).with_context(|| format!("opening {}", tags.display()))?;
            let report = ingest_tags_stream(BufReader::new(f), &mut model);
            let mut w: Vec<String> = report.errors.iter().map(|e| e.to_string()).collect();
            w.extend(
                report
                    .skipped_kinds
                    .iter()
                    .map(|(k, n)| format!("skipped {n} tag(s) of kind {k}")),
            );
            w
        }
        None => extract_all_builtin(&mut model)?,
    };
    for w in &warnings {
        tracing::warn!("{w}");
    }
    Ok((model, warnings))
}

/// The configured provider, recording every call to `transcript`.
pub fn make_provider(cfg: &RunConfig, transcript: &Path) -> anyhow::Result<Provider> {
    let provider = match cfg.provider.kind {
        ProviderKind::Oracle => Provider::oracle(),
        ProviderKind::Http => {
            let http = cfg
                .provider
                .http()
                .ok_or_else(|| UsageError("http provider needs endpoint and model".into()))?;
            Provider::new(HttpBackend::from_env(http))
        }
        ProviderKind::Replay => {
            let path = cfg
                .provider
                .transcript_path
                .as_ref()
                .ok_or_else(|| UsageError("replay provider needs transcript_path".into()))?;
            let backend = ReplayBackend::load(path)
                .with_context(|| format!("loading transcript {}", path.display()))?;
            Provider::new(backend)
        }
    };
    provider
        .with_in_flight_limit(cfg.worker_limit)
        .record_to(transcript)
        .with_context(|| format!("creating transcript {}", transcript.display()))
}

fn load_spec(cfg: &RunConfig) -> anyhow::Result<SpecDocument> {
    parse_spec_file(&cfg.spec_path).with_context(|| format!("parsing {}", cfg.spec_path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let bytes = serde_json::to_vec_pretty(value)?;
    spectrace::fsio::write_atomic(path, &bytes)
        .with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub run_id: String,
    pub folders: usize,
    pub files: usize,
    pub symbols: usize,
    pub warnings: Vec<String>,
    pub structure_docs: usize,
    pub cache: CacheStats,
    pub ledger: LedgerSnapshot,
    pub transcript: PathBuf,
    pub runtime_seconds: f64,
}

/// Scans, extracts symbols and makes sure every structure doc exists under
/// `<out>/structures`. Docs already on disk and still valid are reused.
pub fn cmd_index(cfg: &RunConfig) -> anyhow::Result<IndexReport> {
    let started = Instant::now();
    let snapshot = cfg.snapshot();
    let run_id = new_run_id(&snapshot);
    let (model, warnings) = build_model(cfg)?;
    let index_dir = cfg.output_dir.join(INDEX_DIR);
    let transcript = index_dir.join(format!("{run_id}.transcript.jsonl"));
    let provider = make_provider(cfg, &transcript)?;
    let cache = structure_cache(cfg);

    generate_repo_structure_doc(&model, &provider, &cache)?;
    let folders = listed_folders(&model);
    for folder in &folders {
        generate_folder_structure_doc(folder, &model, &provider, &cache)?;
    }
    let files: Vec<&String> = model.symbol_by_file.keys().collect();
    for file in &files {
        generate_file_structure_doc(file, &model, &provider, &cache)?;
    }

    let report = IndexReport {
        run_id,
        folders: model.folders.len(),
        files: model.files.len(),
        symbols: model.symbols.len(),
        warnings,
        structure_docs: 1 + folders.len() + files.len(),
        cache: cache.stats(),
        ledger: provider.ledger().snapshot(),
        transcript,
        runtime_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&index_dir.join(INDEX_REPORT), &report)?;
    tracing::info!(
        files = report.files,
        symbols = report.symbols,
        generated = report.cache.generated,
        calls = report.ledger.total_calls,
        "index complete"
    );
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn finish_record(
    cfg: &RunConfig,
    run_id: String,
    method: &str,
    traces: Vec<spectrace::SectionTrace>,
    ledger: LedgerSnapshot,
    runtime_seconds: f64,
    transcript: Option<PathBuf>,
    spec: &SpecDocument,
) -> anyhow::Result<(RunRecord, PathBuf)> {
    let record = RunRecord {
        run_id,
        method: method.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        config: cfg.snapshot(),
        traces,
        ledger,
        runtime_seconds,
        transcript,
    };
    let runs = cfg.output_dir.join(RUNS_DIR);
    let path = record.save(&runs)?;
    let gaps = gap_report(&record.traces, spec);
    let gap_path = runs.join(format!("{}-{}.gaps.md", record.run_id, record.method));
    spectrace::fsio::write_atomic(&gap_path, gaps.to_markdown().as_bytes())
        .with_context(|| format!("writing {}", gap_path.display()))?;
    tracing::info!(path = %path.display(), sections = record.traces.len(), "run written");
    Ok((record, path))
}

/// Runs the hierarchical pipeline and writes a run record.
pub fn cmd_map(cfg: &RunConfig) -> anyhow::Result<(RunRecord, PathBuf)> {
    let spec = load_spec(cfg)?;
    let run_id = new_run_id(&cfg.snapshot());
    let (model, _) = build_model(cfg)?;
    let transcript = cfg
        .output_dir
        .join(RUNS_DIR)
        .join(format!("{run_id}-hier.transcript.jsonl"));
    let provider = make_provider(cfg, &transcript)?;
    let cache = structure_cache(cfg);
    let run = run_pipeline(&spec, &model, &provider, &cache, &cfg.pipeline)?;
    for t in run.traces.iter().filter(|t| t.is_error()) {
        tracing::warn!(section = %t.section_id, error = ?t.error, "section errored");
    }
    finish_record(
        cfg,
        run_id,
        "hier",
        run.traces,
        run.ledger,
        run.runtime_seconds,
        Some(transcript),
        &spec,
    )
}

/// Loads `<out>/index/hybrid_index.json` when it matches the current
/// repository and descriptions; otherwise builds and saves a fresh one.
pub fn load_or_build_hybrid_index(
    cfg: &RunConfig,
    model: &RepoModel,
    provider: &Provider,
    embedder: &dyn Embedder,
) -> anyhow::Result<(HybridIndex, bool)> {
    let cache = structure_cache(cfg);
    let descriptions = symbol_descriptions(model, provider, &cache)?;
    let path = cfg.output_dir.join(INDEX_DIR).join(HYBRID_SNAPSHOT);
    let want = expected_fingerprint(model, &descriptions, embedder.dim());
    if path.is_file() {
        match HybridIndex::load(&path) {
            Ok(idx) if idx.fingerprint == want => return Ok((idx, false)),
            Ok(_) => tracing::info!("hybrid index is stale, rebuilding"),
            Err(e) => tracing::warn!(error = %e, "unreadable hybrid index, rebuilding"),
        }
    }
    let idx = build_hybrid_index(model, &descriptions, embedder)?;
    idx.save(&path)?;
    tracing::info!(docs = idx.len(), path = %path.display(), "hybrid index built");
    Ok((idx, true))
}

/// Runs one retrieval baseline; `method` is `grep` or `hybrid`.
pub fn cmd_baseline(cfg: &RunConfig, method: &str) -> anyhow::Result<(RunRecord, PathBuf)> {
    let method = BaselineMethod::parse(method)
        .ok_or_else(|| UsageError(format!("unknown baseline method `{method}` (grep|hybrid)")))?;
    let spec = load_spec(cfg)?;
    let run_id = new_run_id(&cfg.snapshot());
    let (model, _) = build_model(cfg)?;
    let name = method.as_str();
    match method {
        BaselineMethod::Grep => {
            let run = run_grep_baseline(&spec, &model, cfg.baseline.grep_k);
            finish_record(
                cfg,
                run_id,
                name,
                run.traces,
                LedgerSnapshot::default(),
                run.runtime_seconds,
                None,
                &spec,
            )
        }
        BaselineMethod::Hybrid => {
            let started = Instant::now();
            let transcript = cfg
                .output_dir
                .join(RUNS_DIR)
                .join(format!("{run_id}-{name}.transcript.jsonl"));
            let provider = make_provider(cfg, &transcript)?;
            let embedder = HashEmbedder::default();
            let (index, _) = load_or_build_hybrid_index(cfg, &model, &provider, &embedder)?;
            let run = run_hybrid_baseline(
                &spec,
                &index,
                &embedder,
                &cfg.baseline.hybrid,
                &cfg.baseline.chunking,
            )?;
            finish_record(
                cfg,
                run_id,
                name,
                run.traces,
                provider.ledger().snapshot(),
                started.elapsed().as_secs_f64(),
                Some(transcript),
                &spec,
            )
        }
    }
}

/// Compares run records against ground truth. Only the pipeline's
/// provider usage is reported; baselines show N/A cost columns.
pub fn cmd_eval(
    run_files: &[PathBuf],
    ground_truth: &Path,
    out_dir: &Path,
) -> anyhow::Result<EvalReport> {
    if run_files.is_empty() {
        return Err(UsageError("eval needs at least one run file".into()).into());
    }
    if !ground_truth.is_file() {
        return Err(UsageError(format!(
            "ground truth {} does not exist",
            ground_truth.display()
        ))
        .into());
    }
    if let Some(missing) = run_files.iter().find(|p| !p.is_file()) {
        return Err(UsageError(format!("run file {} does not exist", missing.display())).into());
    }
    let gt = GroundTruth::load(ground_truth)?;
    let records: Vec<RunRecord> = run_files
        .iter()
        .map(|p| RunRecord::load(p))
        .collect::<anyhow::Result<_>>()?;
    let cfg: RunConfig = serde_json::from_value(records[0].config.clone())
        .context("run record carries an unreadable config snapshot")?;
    let out_dir = out_dir.to_path_buf();
    for r in &records {
        if let Some(root) = r.config.get("repo_root").and_then(|v| v.as_str()) {
            let root = Path::new(root);
            let out = out_dir.canonicalize().unwrap_or_else(|_| out_dir.clone());
            if out.starts_with(root) {
                return Err(UsageError(format!(
                    "output dir {} lies inside repo_root {}",
                    out_dir.display(),
                    root.display()
                ))
                .into());
            }
        }
    }
    let spec = load_spec(&cfg)?;
    gt.check_against(&spec)?;
    let model = scan_repository(&cfg.repo_root, &cfg.include_extensions, &cfg.exclude_globs)?;
    let runs: Vec<MethodRun> = records
        .iter()
        .map(|r| MethodRun {
            method: r.method.clone(),
            traces: r.traces.clone(),
            ledger: (r.method == "hier").then(|| r.ledger.clone()),
            runtime_seconds: r.runtime_seconds,
        })
        .collect();
    let report = compare_methods(&runs, &gt, &model)?;
    let dir = out_dir.join(EVAL_DIR);
    spectrace::fsio::write_atomic(&dir.join("eval_report.md"), report.to_markdown().as_bytes())?;
    spectrace::fsio::write_atomic(&dir.join("eval_report.json"), report.to_json().as_bytes())?;
    tracing::info!(runs = records.len(), dir = %dir.display(), "evaluation written");
    Ok(report)
}
