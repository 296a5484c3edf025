//! The desk-scale crater run over `fixtures/registry`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use breakcheck::crater::{read_records, run_configured, run_job, CraterConfig, CraterJob, RecordStatus};
use breakcheck::lints::{load_catalog, CatalogSource};
use breakcheck::registry::LocalIndex;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn index() -> LocalIndex {
    LocalIndex::new(fixtures().join("registry"))
}

fn config() -> CraterConfig {
    CraterConfig::load(&fixtures().join("crater/job.toml")).unwrap()
}

#[test]
fn outputs_match_the_goldens_byte_for_byte() {
    let catalog = load_catalog(CatalogSource::Embedded).unwrap();
    let out = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let (_, stats) = run_configured(&config(), &index(), &catalog, out.path()).unwrap();
    assert!(start.elapsed() < Duration::from_secs(30));

    for name in ["records.csv", "stats.csv"] {
        let got = std::fs::read_to_string(out.path().join(name)).unwrap();
        let want = std::fs::read_to_string(fixtures().join("crater").join(name)).unwrap();
        assert_eq!(got, want, "{name}");
    }
    for row in &stats {
        assert!(row.affected_crates <= row.different_releases && row.different_releases <= row.individual_items);
    }
}

#[test]
fn resuming_from_a_checkpoint_reproduces_the_run() {
    let catalog = load_catalog(CatalogSource::Embedded).unwrap();
    let out = tempfile::tempdir().unwrap();
    let (first, _) = run_configured(&config(), &index(), &catalog, out.path()).unwrap();
    let checkpoint = std::fs::read_to_string(out.path().join("checkpoint.jsonl")).unwrap();
    assert_eq!(checkpoint.lines().count(), 5);

    // Every crate is checkpointed, so an index that no longer exists is
    // never consulted.
    let gone = LocalIndex::new(out.path().join("no-such-index"));
    let job = CraterJob::from_config(&config(), &index()).unwrap();
    let second = run_job(&job, &gone, &catalog, Some(&out.path().join("checkpoint.jsonl"))).unwrap();
    assert_eq!(first, second);
}

#[test]
fn worker_count_does_not_change_the_records() {
    let catalog = load_catalog(CatalogSource::Embedded).unwrap();
    let mut job = CraterJob::from_config(&config(), &index()).unwrap();
    job.workers = 1;
    let serial = run_job(&job, &index(), &catalog, None).unwrap();
    job.workers = 4;
    assert_eq!(run_job(&job, &index(), &catalog, None).unwrap(), serial);
}

#[test]
fn top_n_and_single_release_crates() {
    let catalog = load_catalog(CatalogSource::Embedded).unwrap();
    let job = CraterJob {
        crates: vec!["delta".into()],
        ..CraterJob::from_config(&config(), &index()).unwrap()
    };
    assert!(run_job(&job, &index(), &catalog, None).unwrap().is_empty());

    let mut cfg = config();
    cfg.top_n = Some(2);
    assert_eq!(
        CraterJob::from_config(&cfg, &index()).unwrap().crates,
        ["alpha", "beta"]
    );
}

#[test]
fn witness_phase_adds_outcomes() {
    let catalog = load_catalog(CatalogSource::Embedded).unwrap();
    let mut cfg = config();
    cfg.witnesses = true;
    let out = tempfile::tempdir().unwrap();
    run_configured(&cfg, &index(), &catalog, out.path()).unwrap();
    let text = std::fs::read_to_string(out.path().join("records.csv")).unwrap();
    assert!(text.starts_with("crate,baseline,current,lint_id,item_path,filename,begin_line,status,witness_outcome\n"));
    let records = read_records(&text).unwrap();
    for r in &records {
        let want = match (r.status, r.lint_id.as_str()) {
            (RecordStatus::Reported, "function_must_use_added") => Some("unsupported"),
            (RecordStatus::Reported, _) => Some("confirmed"),
            _ => None,
        };
        assert_eq!(r.witness_outcome.as_deref(), want, "{r:?}");
    }
}
