//! Structure-doc cache soundness and token accounting.

mod common;

use std::collections::BTreeMap;
use std::path::Path;

use spectrace::provider::transcript::read_transcript;
use spectrace::repo::structure::{
    generate_file_structure_doc, generate_folder_structure_doc, generate_repo_structure_doc,
    listed_folders, StructureCache,
};
use spectrace::repo::{extract_all_builtin, scan_repository, DEFAULT_EXTENSIONS, NO_GLOBS};
use spectrace::{run_pipeline, Phase, PipelineConfig, Provider, RepoModel};

const FILES: &[&str] = &["top.c", "src/a.c", "src/b.c", "src/core/c.c", "lib/d.c"];

fn write_repo(root: &Path) {
    for (i, f) in FILES.iter().enumerate() {
        let p = root.join(f);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(
            p,
            format!("/* module {i} */\n\n/* does thing {i} */\nint fn_{i}(void)\n{{\n    return {i};\n}}\n"),
        )
        .unwrap();
    }
}

fn model(root: &Path) -> RepoModel {
    let mut m = scan_repository(root, DEFAULT_EXTENSIONS, NO_GLOBS).unwrap();
    extract_all_builtin(&mut m).unwrap();
    m
}

/// Every doc keyed by `scope:target`, with the provider's call count.
fn generate_all(model: &RepoModel, cache_dir: &Path) -> (BTreeMap<String, u64>, u64) {
    let provider = Provider::oracle();
    let cache = StructureCache::on_disk(cache_dir);
    let mut keys = BTreeMap::new();
    let d = generate_repo_structure_doc(model, &provider, &cache).unwrap();
    keys.insert("repo:".to_string(), d.cache_key);
    for f in listed_folders(model) {
        let d = generate_folder_structure_doc(&f, model, &provider, &cache).unwrap();
        keys.insert(format!("folder:{f}"), d.cache_key);
    }
    for f in model.files.keys() {
        let d = generate_file_structure_doc(f, model, &provider, &cache).unwrap();
        keys.insert(format!("file:{f}"), d.cache_key);
    }
    let stats = cache.stats();
    assert_eq!(
        stats.generated as u64,
        provider.ledger().snapshot().total_calls
    );
    (keys, provider.ledger().snapshot().total_calls)
}

fn changed(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> Vec<String> {
    a.iter()
        .filter(|(k, v)| b.get(*k) != Some(v))
        .map(|(k, _)| k.clone())
        .collect()
}

#[test]
fn mutating_one_file_invalidates_exactly_its_chain() {
    for (victim, folder) in [("src/core/c.c", "src/core"), ("top.c", "")] {
        let dir = tempfile::tempdir().unwrap();
        let repo = dir.path().join("repo");
        let cache = dir.path().join("structures");
        write_repo(&repo);

        let (before, calls) = generate_all(&model(&repo), &cache);
        assert_eq!(calls as usize, before.len());
        let (again, calls) = generate_all(&model(&repo), &cache);
        assert_eq!(calls, 0);
        assert_eq!(before, again);

        let p = repo.join(victim);
        let text = std::fs::read_to_string(&p).unwrap();
        std::fs::write(&p, text.replace("return", "return 1 +")).unwrap();

        let (after, calls) = generate_all(&model(&repo), &cache);
        let mut expect = vec![
            "file:".to_string() + victim,
            format!("folder:{folder}"),
            "repo:".into(),
        ];
        expect.sort();
        assert_eq!(changed(&before, &after), expect, "{victim}");
        assert_eq!(calls, 3, "{victim}");
    }
}

#[test]
fn transcript_tokens_sum_to_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let spec = common::nfc_spec();
    let model = common::nfc_model();
    let provider = Provider::oracle().record_to(&path).unwrap();
    let cache = StructureCache::in_memory();
    let run = run_pipeline(&spec, &model, &provider, &cache, &PipelineConfig::default()).unwrap();

    let entries = read_transcript(&path).unwrap();
    assert_eq!(entries.len() as u64, run.ledger.total_calls);
    let sum: u64 = entries
        .iter()
        .map(|e| e.usage.prompt_tokens + e.usage.completion_tokens)
        .sum();
    assert_eq!(sum, run.ledger.total_tokens);
    for phase in Phase::ALL {
        let s: u64 = entries
            .iter()
            .filter(|e| e.phase == phase)
            .map(|e| e.usage.prompt_tokens + e.usage.completion_tokens)
            .sum();
        assert_eq!(s, run.ledger.phases[&phase].total(), "{phase}");
    }
    assert!(run.ledger.phases[&Phase::Validation].calls > 0);
}
