//! The example configurations shipped in configs/ parse and validate.

use std::fs;
use std::path::Path;

use fockbench::experiments::{ExperimentConfig, Suite};

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3, "only {seen} configs found");
}

#[test]
fn every_suite_has_defaults_that_validate() {
    for s in Suite::all() {
        ExperimentConfig::for_suite(s).validate().unwrap();
    }
}
