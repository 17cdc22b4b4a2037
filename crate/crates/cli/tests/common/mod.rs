#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spectrace_cli::RunConfig;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .canonicalize()
        .unwrap()
}

pub fn ground_truth() -> PathBuf {
    fixtures().join("nfc_ground_truth.json")
}

/// The fixture run configuration redirected to `out`.
pub fn config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&fixtures().join("nfc_run.json")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg.effective(true).unwrap()
}

/// Writes a config file for the binary; `patch` is merged over the fixture
/// config's top-level keys.
pub fn write_config(dir: &Path, out: &Path, patch: serde_json::Value) -> PathBuf {
    let text = std::fs::read_to_string(fixtures().join("nfc_run.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let f = fixtures();
    v["repo_root"] = f.join("nfc_repo").to_string_lossy().into();
    v["spec_path"] = f.join("nfc_spec.md").to_string_lossy().into();
    v["output_dir"] = out.to_string_lossy().into();
    for (k, val) in patch.as_object().unwrap() {
        v[k] = val.clone();
    }
    let path = dir.join("run.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
    path
}

pub fn spectrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectrace"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

/// Relative path → content of every file under `root`.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}
