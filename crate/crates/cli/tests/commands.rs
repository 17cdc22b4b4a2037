//! The subcommands driven through the library entry points.

mod common;

use std::path::Path;

use common::*;
use spectrace::pipeline::PipelineRun;
use spectrace::repo::structure::StructureCache;
use spectrace::spec_corpus::parse_spec_file;
use spectrace::{run_pipeline, Provider};
use spectrace_cli::commands::{cmd_index, HYBRID_SNAPSHOT, INDEX_DIR, STRUCTURES_DIR};
use spectrace_cli::config::{ProviderConfig, ProviderKind};
use spectrace_cli::{cmd_baseline, cmd_eval, cmd_map, exit_code, EXIT_USAGE};

#[test]
fn second_index_makes_no_calls_and_leaves_docs_untouched() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config(out.path());
    let first = cmd_index(&cfg).unwrap();
    assert!(first.ledger.total_calls > 0);
    // folders holding only subfolders need no provider call
    assert!(first.ledger.total_calls <= first.cache.generated as u64);
    assert_eq!(first.structure_docs, first.cache.generated);
    let docs = tree(&out.path().join(STRUCTURES_DIR));
    assert_eq!(docs.len(), first.structure_docs);

    let second = cmd_index(&cfg).unwrap();
    assert_eq!(second.ledger.total_calls, 0);
    assert_eq!(second.cache.generated, 0);
    assert_eq!(second.cache.disk_hits, first.structure_docs);
    assert_eq!(tree(&out.path().join(STRUCTURES_DIR)), docs);
}

#[test]
fn corrupted_doc_is_regenerated() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config(out.path());
    let first = cmd_index(&cfg).unwrap();
    let docs = tree(&out.path().join(STRUCTURES_DIR));
    let victim = docs
        .keys()
        .find(|k| k.ends_with("_c_structure.md"))
        .unwrap()
        .clone();
    std::fs::write(out.path().join(STRUCTURES_DIR).join(&victim), "garbage\n").unwrap();

    let second = cmd_index(&cfg).unwrap();
    assert_eq!(second.cache.corrupt, 1);
    assert_eq!(second.cache.generated, 1);
    assert_eq!(second.cache.disk_hits, first.structure_docs - 1);
    assert_eq!(tree(&out.path().join(STRUCTURES_DIR)), docs);
}

#[test]
fn empty_repository_indexes_and_maps() {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("repo");
    std::fs::create_dir_all(repo.join("docs")).unwrap();
    std::fs::write(repo.join("docs/readme.txt"), "nothing to see").unwrap();
    let mut cfg = config(&dir.path().join("out"));
    cfg.repo_root = repo;
    let cfg = cfg.effective(true).unwrap();
    let report = cmd_index(&cfg).unwrap();
    assert_eq!(report.files, 0);
    assert_eq!(report.structure_docs, 1);
    assert_eq!(report.ledger.total_calls, 0);

    let (rec, _) = cmd_map(&cfg).unwrap();
    assert_eq!(rec.traces.len(), 10);
    for t in &rec.traces {
        assert!(t.files.is_empty());
        assert!(matches!(
            t.status,
            Some(spectrace::Status::NotImplemented | spectrace::Status::NotApplicable)
        ));
    }
}

fn library_run() -> PipelineRun {
    let f = fixtures();
    let cfg = config(Path::new("/nonexistent-out"));
    let spec = parse_spec_file(&f.join("nfc_spec.md")).unwrap();
    let (model, _) = spectrace_cli::commands::build_model(&cfg).unwrap();
    run_pipeline(
        &spec,
        &model,
        &Provider::oracle(),
        &StructureCache::in_memory(),
        &cfg.pipeline,
    )
    .unwrap()
}

#[test]
fn map_matches_the_library_pipeline() {
    let out = tempfile::tempdir().unwrap();
    let (rec, path) = cmd_map(&config(out.path())).unwrap();
    assert!(path.starts_with(out.path().join("runs")));
    assert!(path
        .file_name()
        .unwrap()
        .to_string_lossy()
        .ends_with("-hier.json"));
    assert_eq!(
        serde_json::to_string(&rec.traces).unwrap(),
        serde_json::to_string(&library_run().traces).unwrap()
    );
    assert!(path
        .with_file_name(
            path.file_name()
                .unwrap()
                .to_string_lossy()
                .replace(".json", ".gaps.md")
        )
        .is_file());
    let transcript = rec.transcript.clone().unwrap();
    assert!(transcript.is_file());
    assert_eq!(rec.config["pipeline"]["theta1"], 0.5);
    assert_eq!(rec.config["pipeline"]["workers"], 4);
}

#[test]
fn replay_reproduces_traces_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let (live, _) = cmd_map(&config(&dir.path().join("live"))).unwrap();

    let mut cfg = config(&dir.path().join("replayed"));
    cfg.provider = ProviderConfig {
        kind: ProviderKind::Replay,
        transcript_path: live.transcript.clone(),
        ..Default::default()
    };
    let cfg = cfg.effective(true).unwrap();
    let (replayed, _) = cmd_map(&cfg).unwrap();
    assert_eq!(
        live.traces_json().as_bytes(),
        replayed.traces_json().as_bytes()
    );
    assert_eq!(live.ledger, replayed.ledger);
}

#[test]
fn worker_limit_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for w in [1, 8] {
        let mut cfg = config(&dir.path().join(format!("w{w}")));
        cfg.worker_limit = w;
        let cfg = cfg.effective(true).unwrap();
        assert_eq!(cfg.pipeline.workers, w);
        runs.push(cmd_map(&cfg).unwrap().0.traces_json());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn hybrid_snapshot_is_written_then_reused() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config(out.path());
    let (a, _) = cmd_baseline(&cfg, "hybrid").unwrap();
    let snap = out.path().join(INDEX_DIR).join(HYBRID_SNAPSHOT);
    assert!(snap.is_file());
    let bytes = std::fs::read(&snap).unwrap();
    let (b, _) = cmd_baseline(&cfg, "hybrid").unwrap();
    assert_eq!(std::fs::read(&snap).unwrap(), bytes);
    assert_eq!(a.traces_json(), b.traces_json());
    // descriptions came from the structure docs written by the first run
    assert_eq!(b.ledger.total_calls, 0);
}

#[test]
fn unknown_baseline_is_a_usage_error() {
    let out = tempfile::tempdir().unwrap();
    let err = cmd_baseline(&config(out.path()), "vector").unwrap_err();
    assert_eq!(exit_code(&err), EXIT_USAGE);
}

#[test]
fn eval_tabulates_every_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir.path().join("out"));
    let (_, hier) = cmd_map(&cfg).unwrap();
    let (_, grep) = cmd_baseline(&cfg, "grep").unwrap();
    let (_, hybrid) = cmd_baseline(&cfg, "hybrid").unwrap();

    let report = cmd_eval(
        &[hier.clone(), grep, hybrid],
        &ground_truth(),
        &dir.path().join("out"),
    )
    .unwrap();
    assert_eq!(report.rows.len(), 3);
    let md = std::fs::read_to_string(dir.path().join("out/eval/eval_report.md")).unwrap();
    assert_eq!(md, report.to_markdown());
    assert!(dir.path().join("out/eval/eval_report.json").is_file());
    let hier_row = report.row("hier").unwrap();
    assert_eq!(hier_row.file_mapping_pct, 100.0);
    assert!(hier_row.tokens_millions.is_some());
    for m in ["grep", "hybrid"] {
        let row = report.row(m).unwrap();
        assert!(row.tokens_millions.is_none(), "{m}");
        assert_eq!(row.file_mapping_pct, 0.0, "{m}");
        assert_eq!(row.file_existence_pct, 100.0, "{m}");
    }

    let single = cmd_eval(&[hier], &ground_truth(), &dir.path().join("single")).unwrap();
    assert_eq!(single.rows.len(), 1);
}

#[test]
fn eval_names_the_section_without_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let (_, run) = cmd_map(&config(&dir.path().join("out"))).unwrap();
    let text = std::fs::read_to_string(ground_truth()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let list = v.as_array_mut().unwrap();
    list.retain(|e| e["section_id"] != "3");
    let gt = dir.path().join("gt.json");
    std::fs::write(&gt, serde_json::to_vec(&v).unwrap()).unwrap();
    let err = cmd_eval(&[run], &gt, &dir.path().join("out")).unwrap_err();
    assert!(format!("{err:#}").contains("section 3"), "{err:#}");
}

#[test]
fn eval_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let err = cmd_eval(std::slice::from_ref(&missing), &ground_truth(), dir.path()).unwrap_err();
    assert_eq!(exit_code(&err), EXIT_USAGE);
    let err = cmd_eval(&[], &ground_truth(), dir.path()).unwrap_err();
    assert_eq!(exit_code(&err), EXIT_USAGE);
    let err = cmd_eval(&[missing], &dir.path().join("gt.json"), dir.path()).unwrap_err();
    assert_eq!(exit_code(&err), EXIT_USAGE);
}

#[test]
fn nothing_is_written_inside_the_repository() {
    let repo = fixtures().join("nfc_repo");
    let before = tree(&repo);
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir.path().join("out"));
    cmd_index(&cfg).unwrap();
    let (_, a) = cmd_map(&cfg).unwrap();
    let (_, b) = cmd_baseline(&cfg, "grep").unwrap();
    let (_, c) = cmd_baseline(&cfg, "hybrid").unwrap();
    cmd_eval(&[a, b, c], &ground_truth(), &dir.path().join("out")).unwrap();
    assert_eq!(tree(&repo), before);

    let mut bad = config(&dir.path().join("out"));
    bad.output_dir = repo.join("out");
    assert!(bad.effective(true).is_err());
}
