//! Witnesses for every supported finding in `test_crates/`, judged by the
//! snapshot-backed stub oracle.

use std::path::{Path, PathBuf};

use breakcheck::checker::check_snapshots;
use breakcheck::lints::{load_catalog, CatalogSource};
use breakcheck::snapshot::{load_snapshot_file, ApiSnapshot};
use breakcheck::witness::{
    classify_witness, generate_witness, StubOracle, WitnessError, WitnessOutcome, SUPPORTED_LINTS,
};

fn pairs() -> Vec<PathBuf> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../test_crates");
    let mut out: Vec<PathBuf> = std::fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.join("expected.txt").exists())
        .collect();
    out.sort();
    out
}

fn load(pair: &Path, side: &str) -> ApiSnapshot {
    load_snapshot_file(&pair.join(side).join("snapshot.json")).unwrap()
}

#[test]
fn supported_findings_are_confirmed() {
    let catalog = load_catalog(CatalogSource::Embedded).unwrap();
    let mut confirmed = Vec::new();
    for pair in pairs() {
        let (b, c) = (load(&pair, "baseline"), load(&pair, "current"));
        let report = check_snapshots(&b, &c, &catalog, None).unwrap();
        let oracle = StubOracle::new([b.clone(), c.clone()]);
        for f in &report.findings {
            match generate_witness(f, &b, &c) {
                Ok(w) => {
                    let outcome = classify_witness(&w, &oracle).unwrap();
                    assert_eq!(
                        outcome,
                        WitnessOutcome::Confirmed,
                        "{} {}:\n{}",
                        f.lint_id,
                        f.path_string(),
                        w.lib_source
                    );
                    confirmed.push(f.lint_id.clone());
                }
                Err(WitnessError::UnsupportedLint(id)) => {
                    assert!(!SUPPORTED_LINTS.contains(&id.as_str()), "{id} has a template");
                }
                Err(e) => panic!("{}: {e}", pair.display()),
            }
        }
    }
    confirmed.sort();
    confirmed.dedup();
    assert_eq!(confirmed, SUPPORTED_LINTS.to_vec());
}
