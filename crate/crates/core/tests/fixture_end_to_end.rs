//! The NFC-style fixture run through all three methods with the oracle
//! provider. Metric values are recomputed here from the raw traces.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::*;
use spectrace::eval::{
    compare_methods, drift_against, file_existence_accuracy, file_mapping_accuracy, gap_report,
    MethodRun, ERRORED_GROUP,
};
use spectrace::{SectionTrace, Status};

/// Mean over sections that expect files of |mapped ∩ expected| / |expected|.
fn mapping_oracle(traces: &[SectionTrace]) -> f64 {
    let gt = nfc_ground_truth();
    let mut sum = 0.0;
    let mut n = 0;
    for t in traces {
        let e = gt.entry(&t.section_id).unwrap();
        if e.expected_files.is_empty() {
            continue;
        }
        let mapped: BTreeSet<&str> = t.files.iter().map(|f| f.path.as_str()).collect();
        let hit = e
            .expected_files
            .iter()
            .filter(|f| mapped.contains(f.as_str()))
            .count();
        sum += hit as f64 / e.expected_files.len() as f64;
        n += 1;
    }
    100.0 * sum / n as f64
}

/// Share of distinct mapped files that exist in the scanned repository.
fn existence_oracle(traces: &[SectionTrace]) -> f64 {
    let model = nfc_model();
    let mapped: BTreeSet<&str> = traces
        .iter()
        .flat_map(|t| t.files.iter().map(|f| f.path.as_str()))
        .collect();
    let real = mapped
        .iter()
        .filter(|f| model.files.contains_key(**f))
        .count();
    100.0 * real as f64 / mapped.len() as f64
}

#[test]
fn fixture_shape() {
    let spec = nfc_spec();
    let model = nfc_model();
    assert_eq!(spec.sections.len(), 10);
    assert!(
        (28..=34).contains(&model.files.len()),
        "{}",
        model.files.len()
    );
    assert!(!model.files.keys().any(|f| f.starts_with("build/")));
    nfc_ground_truth().check_against(&spec).unwrap();
}

#[test]
fn pipeline_beats_thresholds() {
    let spec = nfc_spec();
    let model = nfc_model();
    let started = Instant::now();
    let run = pipeline(&spec, &model, 4);
    assert!(started.elapsed().as_secs_f64() < 10.0);
    let gt = nfc_ground_truth();

    let mapping = file_mapping_accuracy(&run.traces, &gt).unwrap();
    let existence = file_existence_accuracy(&run.traces, &model);
    assert!((mapping - mapping_oracle(&run.traces)).abs() < 1e-9);
    assert!((existence - existence_oracle(&run.traces)).abs() < 1e-9);
    assert!(mapping >= 70.0, "mapping {mapping}");
    assert!(existence >= 95.0, "existence {existence}");
    // frozen: every expected file is found
    assert_eq!(mapping, 100.0);
    assert_eq!(existence, 100.0);
}

#[test]
fn baselines_find_real_files_but_never_the_right_ones() {
    let spec = nfc_spec();
    let model = nfc_model();
    let gt = nfc_ground_truth();
    for (name, run) in [
        ("grep", grep(&spec, &model)),
        ("hybrid", hybrid(&spec, &model)),
    ] {
        let mapping = file_mapping_accuracy(&run.traces, &gt).unwrap();
        let existence = file_existence_accuracy(&run.traces, &model);
        assert_eq!(mapping, mapping_oracle(&run.traces), "{name}");
        assert_eq!(existence, existence_oracle(&run.traces), "{name}");
        assert_eq!(existence, 100.0, "{name}");
        assert_eq!(mapping, 0.0, "{name}");
    }
}

#[test]
fn worked_example_drift() {
    let spec = nfc_spec();
    let model = nfc_model();
    let gt = nfc_ground_truth();
    let entry = gt.entry("1").unwrap();
    let g = drift_against(&grep(&spec, &model).traces[0], entry);
    let h = drift_against(&hybrid(&spec, &model).traces[0], entry);
    let p = drift_against(&pipeline(&spec, &model, 4).traces[0], entry);
    assert_eq!((g.folder, g.file, g.symbol), (1.0, 1.0, 0.5));
    assert_eq!(g.total(), 2.5);
    assert_eq!((h.folder, h.file, h.symbol), (0.5, 0.5, 0.5));
    assert_eq!(h.total(), 1.5);
    assert!(p.total() <= 0.5);
    assert_eq!(p.total(), 0.3);
}

#[test]
fn worked_example_pipeline_trace() {
    let spec = nfc_spec();
    let model = nfc_model();
    let t = &pipeline(&spec, &model, 4).traces[0];
    let folders: Vec<&str> = t.folders.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(folders, ["src/service", "src/halimpl"]);
    let files: BTreeSet<&str> = t.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(
        files,
        BTreeSet::from(["src/service/nfc_service.c", "src/halimpl/phTmlNfc_i2c.c"])
    );
    let validated: BTreeSet<&str> = t
        .validated_symbols
        .iter()
        .map(|v| v.symbol.name.as_str())
        .collect();
    assert!(validated.contains("nfcService_Init"));
    assert!(validated.contains("phTmlNfc_I2COpen"));
    // one extra symbol from the expected layer
    assert_eq!(validated.len(), 3);
}

#[test]
fn statuses_and_gap_report() {
    let spec = nfc_spec();
    let model = nfc_model();
    let run = pipeline(&spec, &model, 4);
    let status = |id: &str| {
        run.traces
            .iter()
            .find(|t| t.section_id == id)
            .and_then(|t| t.status)
            .unwrap()
    };
    assert_eq!(status("8"), Status::NotImplemented);
    assert_eq!(status("9"), Status::NotImplemented);
    assert_eq!(status("10"), Status::NotApplicable);
    for id in ["2", "3", "4", "5", "6", "7"] {
        assert!(
            matches!(
                status(id),
                Status::Implemented | Status::PartiallyImplemented
            ),
            "section {id}: {:?}",
            status(id)
        );
    }

    let report = gap_report(&run.traces, &spec);
    assert_eq!(report.total(), spec.sections.len());
    assert_eq!(report.count(ERRORED_GROUP), 0);
    let not_impl: Vec<&str> = report.groups["Not_Implemented"]
        .iter()
        .map(|e| e.section_id.as_str())
        .collect();
    assert_eq!(not_impl, ["8", "9"]);
    for e in &report.groups["Not_Implemented"] {
        assert!(!e.unmapped_requirements.is_empty(), "{}", e.section_id);
    }
    let na: Vec<&str> = report.groups["Not_Applicable"]
        .iter()
        .map(|e| e.section_id.as_str())
        .collect();
    assert_eq!(na, ["10"]);
    let md = report.to_markdown();
    assert!(md.contains("### 8 Firmware Update"));
}

#[test]
fn comparison_table_frozen() {
    let spec = nfc_spec();
    let model = nfc_model();
    let gt = nfc_ground_truth();
    let p = pipeline(&spec, &model, 4);
    let g = grep(&spec, &model);
    let h = hybrid(&spec, &model);
    let runs = vec![
        MethodRun {
            method: "hierarchical".into(),
            traces: p.traces,
            ledger: Some(p.ledger),
            runtime_seconds: p.runtime_seconds,
        },
        MethodRun {
            method: "grep".into(),
            traces: g.traces,
            ledger: None,
            runtime_seconds: g.runtime_seconds,
        },
        MethodRun {
            method: "hybrid".into(),
            traces: h.traces,
            ledger: None,
            runtime_seconds: h.runtime_seconds,
        },
    ];
    let report = compare_methods(&runs, &gt, &model).unwrap();
    let hier = report.row("hierarchical").unwrap();
    assert_eq!(hier.file_mapping_pct, 100.0);
    assert_eq!(hier.file_existence_pct, 100.0);
    assert!(hier.tokens_millions.unwrap() > 0.0);
    assert!(hier.confidence_pct.unwrap() > 0.0);
    for name in ["grep", "hybrid"] {
        let row = report.row(name).unwrap();
        assert!(row.confidence_pct.is_none());
        assert!(row.tokens_millions.is_none());
        assert_eq!(row.file_mapping_pct, 0.0);
    }
    // mean drift over ten sections, frozen from the first verified run
    let drift = |m: &str| report.row(m).unwrap().mean_drift;
    assert_eq!(format!("{:.2}", drift("hierarchical")), "0.53");
    assert_eq!(format!("{:.2}", drift("grep")), "2.55");
    assert_eq!(format!("{:.2}", drift("hybrid")), "2.85");
    assert!(drift("hierarchical") < drift("grep"));
    assert!(drift("hierarchical") < drift("hybrid"));
    let md = report.to_markdown();
    assert_eq!(md.lines().filter(|l| l.starts_with("| ")).count(), 4);
    assert!(md.contains("| grep | N/A | N/A | N/A | N/A | 100.0 | 0.0 |"));
}
