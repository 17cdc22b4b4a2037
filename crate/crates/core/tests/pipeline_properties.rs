//! Structural properties of every method on randomly generated small
//! repositories and specifications.

mod common;

use std::collections::BTreeSet;
use std::path::Path;

use proptest::prelude::*;
use spectrace::baselines::grep::grep_file_scores;
use spectrace::baselines::{grep_search, run_grep_baseline, ChunkConfig, HybridWeights};
use spectrace::eval::gap_report;
use spectrace::repo::structure::StructureCache;
use spectrace::repo::{extract_all_builtin, scan_repository, DEFAULT_EXTENSIONS, NO_GLOBS};
use spectrace::spec_corpus::parse_spec_markdown;
use spectrace::{
    run_pipeline, PipelineConfig, Provider, RepoModel, SectionTrace, SpecDocument, Status,
};

const WORDS: &[&str] = &[
    "clock",
    "reset",
    "buffer",
    "credit",
    "packet",
    "poll",
    "timer",
    "frame",
    "queue",
    "flash",
    "mode",
    "token",
    "page",
    "wake",
    "power",
    "discovery",
    "record",
    "link",
];
const FOLDERS: &[&str] = &[
    "src",
    "src/core",
    "src/core/low",
    "src/io",
    "lib",
    "lib/util",
    "tests",
];

#[derive(Debug, Clone)]
struct FileSpec {
    folder: usize,
    header: Vec<&'static str>,
    funcs: Vec<(Vec<&'static str>, Vec<&'static str>)>,
}

#[derive(Debug, Clone)]
struct Scenario {
    files: Vec<FileSpec>,
    sections: Vec<(Vec<&'static str>, Vec<&'static str>, bool)>,
}

fn words(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(WORDS), n)
}

fn scenario() -> impl Strategy<Value = Scenario> {
    let file = (
        0..FOLDERS.len(),
        words(1..6),
        prop::collection::vec((words(1..3), words(0..8)), 1..4),
    )
        .prop_map(|(folder, header, funcs)| FileSpec {
            folder,
            header,
            funcs,
        });
    let section = (words(1..3), words(2..14), any::<bool>());
    (
        prop::collection::vec(file, 1..9),
        prop::collection::vec(section, 1..5),
    )
        .prop_map(|(files, sections)| Scenario { files, sections })
}

fn materialize(s: &Scenario, root: &Path) -> (RepoModel, SpecDocument) {
    for (i, f) in s.files.iter().enumerate() {
        let dir = root.join("repo").join(FOLDERS[f.folder]);
        std::fs::create_dir_all(&dir).unwrap();
        let mut text = format!("/* {} */\n#include <stdint.h>\n\n", f.header.join(" "));
        for (j, (name, comment)) in f.funcs.iter().enumerate() {
            text.push_str(&format!(
                "/* {} */\nint {}_{i}_{j}(void)\n{{\n    return {j};\n}}\n\n",
                comment.join(" "),
                name.join("_")
            ));
        }
        std::fs::write(dir.join(format!("f{i}.c")), text).unwrap();
    }
    let mut md = String::new();
    for (i, (title, body, normative)) in s.sections.iter().enumerate() {
        let modal = if *normative {
            "The device shall"
        } else {
            "Notes on"
        };
        md.push_str(&format!(
            "## {} {}\n\n{modal} {}.\n\n",
            i + 1,
            title.join(" "),
            body.join(" ")
        ));
    }
    let spec = parse_spec_markdown(&md).unwrap();
    let mut model = scan_repository(&root.join("repo"), DEFAULT_EXTENSIONS, NO_GLOBS).unwrap();
    extract_all_builtin(&mut model).unwrap();
    (model, spec)
}

fn run(spec: &SpecDocument, model: &RepoModel, cfg: &PipelineConfig) -> Vec<SectionTrace> {
    let provider = Provider::oracle();
    let cache = StructureCache::in_memory();
    run_pipeline(spec, model, &provider, &cache, cfg)
        .unwrap()
        .traces
}

fn hybrid(spec: &SpecDocument, model: &RepoModel) -> Vec<SectionTrace> {
    use spectrace::baselines::{build_hybrid_index, run_hybrid_baseline, symbol_descriptions};
    use spectrace::embed::HashEmbedder;
    let provider = Provider::oracle();
    let cache = StructureCache::in_memory();
    let descs = symbol_descriptions(model, &provider, &cache).unwrap();
    let emb = HashEmbedder::new(64);
    let index = build_hybrid_index(model, &descs, &emb).unwrap();
    let w = HybridWeights {
        final_k: 5,
        ..Default::default()
    };
    run_hybrid_baseline(spec, &index, &emb, &w, &ChunkConfig::default())
        .unwrap()
        .traces
}

fn status_ok(t: &SectionTrace) -> Result<(), TestCaseError> {
    if t.is_error() {
        prop_assert!(t.status.is_none());
        return Ok(());
    }
    prop_assert!(t.status.is_some(), "section {} has no status", t.section_id);
    if t.validated_symbols.is_empty() {
        prop_assert!(matches!(
            t.status,
            Some(Status::NotImplemented | Status::NotApplicable)
        ));
    }
    Ok(())
}

fn paths(v: &[spectrace::pipeline::Scored]) -> BTreeSet<String> {
    v.iter().map(|s| s.path.clone()).collect()
}

fn symbol_ids(t: &SectionTrace) -> BTreeSet<String> {
    t.symbols.iter().map(|s| s.symbol.id()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn containment_and_status_hold_for_all_methods(s in scenario()) {
        let dir = tempfile::tempdir().unwrap();
        let (model, spec) = materialize(&s, dir.path());
        let traces = [
            run(&spec, &model, &PipelineConfig::default()),
            run_grep_baseline(&spec, &model, 4).traces,
            hybrid(&spec, &model),
        ];
        for method in &traces {
            prop_assert_eq!(method.len(), spec.sections.len());
            for t in method {
                if let Err(e) = t.check_containment() {
                    return Err(TestCaseError::fail(format!("section {}: {e}", t.section_id)));
                }
                status_ok(t)?;
            }
            let report = gap_report(method, &spec);
            prop_assert_eq!(report.total(), spec.sections.len());
            let ids: BTreeSet<&str> = report
                .groups
                .values()
                .flatten()
                .map(|e| e.section_id.as_str())
                .collect();
            prop_assert_eq!(ids.len(), spec.sections.len());
        }
    }

    #[test]
    fn worker_count_does_not_change_traces(s in scenario()) {
        let dir = tempfile::tempdir().unwrap();
        let (model, spec) = materialize(&s, dir.path());
        let one = run(&spec, &model, &PipelineConfig { workers: 1, ..Default::default() });
        let eight = run(&spec, &model, &PipelineConfig { workers: 8, ..Default::default() });
        prop_assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&eight).unwrap()
        );
    }

    #[test]
    fn raising_thresholds_never_enlarges(s in scenario(), lo in 0.0f64..0.6, step in 0.05f64..0.4) {
        let dir = tempfile::tempdir().unwrap();
        let (model, spec) = materialize(&s, dir.path());
        let hi = (lo + step).min(1.0);
        let base = PipelineConfig { theta1: lo, theta2: lo, theta3: lo, ..Default::default() };

        let a = run(&spec, &model, &base);
        let b = run(&spec, &model, &PipelineConfig { theta1: hi, ..base.clone() });
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y.folders.len() <= x.folders.len(), "section {}", x.section_id);
        }

        let b = run(&spec, &model, &PipelineConfig { theta2: hi, ..base.clone() });
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(paths(&y.files).is_subset(&paths(&x.files)), "section {}", x.section_id);
        }

        let b = run(&spec, &model, &PipelineConfig { theta3: hi, ..base.clone() });
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(symbol_ids(y).is_subset(&symbol_ids(x)), "section {}", x.section_id);
        }
    }

    #[test]
    fn adding_a_matching_line_never_lowers_a_file_score(
        s in scenario(),
        terms in prop::collection::btree_set(prop::sample::select(WORDS), 1..4),
        target in any::<prop::sample::Index>(),
        extra in words(0..5),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let (model, _) = materialize(&s, dir.path());
        let terms: Vec<String> = terms.into_iter().map(str::to_string).collect();
        let before = grep_file_scores(&model, &terms);
        let file = model.files.keys().nth(target.index(model.files.len())).unwrap().clone();

        let path = model.root.join(&file);
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str(&format!("// {} {}\n", terms[0], extra.join(" ")));
        std::fs::write(&path, text).unwrap();
        let model = scan_repository(&model.root, DEFAULT_EXTENSIONS, NO_GLOBS).unwrap();
        let after = grep_file_scores(&model, &terms);

        let b = before.get(&file).copied().unwrap_or(0.0);
        let a = after.get(&file).copied().unwrap_or(0.0);
        prop_assert!(a >= b - 1e-12, "{file}: {b} -> {a}");
        // and the search itself is deterministic
        prop_assert_eq!(grep_search(&model, &terms, 5), grep_search(&model, &terms, 5));
    }

    #[test]
    fn deeper_grep_extends_shallower(s in scenario(), k in 1usize..6) {
        let dir = tempfile::tempdir().unwrap();
        let (model, spec) = materialize(&s, dir.path());
        let terms = &spec.sections[0].query_terms;
        let short = grep_search(&model, terms, k);
        let long = grep_search(&model, terms, k + 3);
        prop_assert!(short.len() <= long.len());
        prop_assert_eq!(&long[..short.len()], &short[..]);
    }
}

#[test]
fn fixture_traces_are_contained() {
    let spec = common::nfc_spec();
    let model = common::nfc_model();
    for traces in [
        common::pipeline(&spec, &model, 4).traces,
        common::grep(&spec, &model).traces,
        common::hybrid(&spec, &model).traces,
    ] {
        for t in &traces {
            t.check_containment().unwrap();
            assert!(t.status.is_some());
        }
    }
}

#[test]
fn fixture_parallel_equivalence() {
    let spec = common::nfc_spec();
    let model = common::nfc_model();
    let one = common::pipeline(&spec, &model, 1).traces;
    let eight = common::pipeline(&spec, &model, 8).traces;
    assert_eq!(
        serde_json::to_string(&one).unwrap(),
        serde_json::to_string(&eight).unwrap()
    );
}
