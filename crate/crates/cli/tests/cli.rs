//! End-to-end runs of the `cargo-breakcheck` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cargo-breakcheck"));
    cmd.current_dir(repo()).env_remove("BREAKCHECK_REGISTRY");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn pair(name: &str) -> (String, String) {
    let dir = format!("test_crates/{name}");
    (
        format!("{dir}/current/Cargo.toml"),
        format!("{dir}/baseline/snapshot.json"),
    )
}

#[test]
fn motivating_pair_fails_with_code_1() {
    let (manifest, baseline) = pair("motivating_auto_trait");
    let out = run(&[
        "check-release",
        "--manifest-path",
        &manifest,
        "--baseline-snapshot",
        &baseline,
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stdout(&out).contains("auto_trait_impl_removed"));
    assert!(stderr(&out).contains("against v3.1.0"), "{}", stderr(&out));
    // Piped stderr is never colored.
    assert!(!stderr(&out).contains('\x1b'));
}

#[test]
fn cargo_subcommand_form_is_accepted() {
    let (manifest, baseline) = pair("motivating_auto_trait");
    let out = run(&[
        "breakcheck",
        "check-release",
        "--manifest-path",
        &manifest,
        "--baseline-snapshot",
        &baseline,
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_snapshots_pass() {
    let (manifest, _) = pair("motivating_auto_trait");
    let same = "test_crates/motivating_auto_trait/current/snapshot.json";
    let out = run(&[
        "check-release",
        "--manifest-path",
        &manifest,
        "--baseline-snapshot",
        same,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("no semver violations"));
}

#[test]
fn conflicting_baselines_are_a_usage_error() {
    let out = run(&["check-release", "--baseline-version", "1.0", "--baseline-root", "x/"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(
        err.contains("--baseline-version") && err.contains("--baseline-root"),
        "{err}"
    );
}

#[test]
fn load_failures_exit_2() {
    let (manifest, _) = pair("function_missing");
    let out = run(&[
        "check-release",
        "--manifest-path",
        &manifest,
        "--baseline-snapshot",
        "no/such.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: "));
    assert!(stdout(&out).is_empty());

    let out = run(&["check-release", "--manifest-path", &manifest]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no baseline given"));
}

#[test]
fn text_reports_match_goldens() {
    for name in ["function_missing", "motivating_auto_trait"] {
        let (manifest, baseline) = pair(name);
        let out = run(&[
            "check-release",
            "--manifest-path",
            &manifest,
            "--baseline-snapshot",
            &baseline,
        ]);
        let golden = std::fs::read_to_string(repo().join(format!("fixtures/reports/{name}.txt"))).unwrap();
        assert_eq!(stdout(&out), golden, "{name}");
    }
}

#[test]
fn release_type_override_changes_the_verdict() {
    let (manifest, baseline) = pair("motivating_auto_trait");
    let out = run(&[
        "check-release",
        "--manifest-path",
        &manifest,
        "--baseline-snapshot",
        &baseline,
        "--release-type",
        "major",
    ]);
    assert_eq!(out.status.code(), Some(0));
    // Findings are still listed; only the verdict changes.
    assert!(stdout(&out).contains("auto_trait_impl_removed"));
}

fn registry_crate(dir: &Path, version: &str) -> PathBuf {
    let reg = repo().join("fixtures/registry");
    let manifest = dir.join("Cargo.toml");
    std::fs::copy(reg.join(format!("manifests/alpha/{version}/Cargo.toml")), &manifest).unwrap();
    std::fs::copy(
        reg.join(format!("snapshots/alpha/{version}.json")),
        dir.join("snapshot.json"),
    )
    .unwrap();
    manifest
}

#[test]
fn registry_baselines() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = registry_crate(tmp.path(), "1.1.0");
    let manifest = manifest.to_str().unwrap();
    let index = repo().join("fixtures/registry");

    // --registry picks the newest earlier release.
    let out = run(&[
        "check-release",
        "--manifest-path",
        manifest,
        "--registry",
        index.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("alpha v1.1.0 against v1.0.0"));
    assert!(stdout(&out).contains("function_missing"));

    // --baseline-version and the no-flag default read the index from the environment.
    for extra in [&["--baseline-version", "1.0"][..], &[]] {
        let out = bin()
            .args(["check-release", "--manifest-path", manifest])
            .args(extra)
            .env("BREAKCHECK_REGISTRY", &index)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(1), "{extra:?}: {}", stderr(&out));
        assert!(stderr(&out).contains("against v1.0.0"));
    }

    let out = run(&[
        "check-release",
        "--manifest-path",
        manifest,
        "--baseline-version",
        "1.0.0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("BREAKCHECK_REGISTRY"));
}

fn copy_pair_side(from: &str, side: &str, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    let src = repo().join("test_crates").join(from).join(side);
    for file in ["Cargo.toml", "snapshot.json"] {
        let text = std::fs::read_to_string(src.join(file)).unwrap();
        // Give each member its own package name.
        let text = if file == "Cargo.toml" {
            text.replace("name = \"x\"", &format!("name = \"{from}\""))
        } else {
            text
        };
        std::fs::write(to.join(file), text).unwrap();
    }
}

#[test]
fn workspace_checks_every_member() {
    let tmp = tempfile::tempdir().unwrap();
    let members = ["function_missing", "motivating_auto_trait"];
    for (side, root) in [("baseline", "old"), ("current", "new")] {
        let ws = tmp.path().join(root);
        for m in members {
            copy_pair_side(m, side, &ws.join("crates").join(m));
        }
        std::fs::write(ws.join("Cargo.toml"), "[workspace]\nmembers = [\"crates/*\"]\n").unwrap();
    }
    let new = tmp.path().join("new/Cargo.toml");
    let old = tmp.path().join("old");
    let args = [
        "check-release",
        "--manifest-path",
        new.to_str().unwrap(),
        "--baseline-root",
        old.to_str().unwrap(),
    ];

    let out = run(&args);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("--- allowed function_missing") && text.contains("--- failure auto_trait_impl_removed"),
        "{text}"
    );

    let out = bin()
        .args(args)
        .args(["--workspace", "--exclude", "motivating_auto_trait"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(!stdout(&out).contains("auto_trait_impl_removed"));

    let out = bin()
        .args(args)
        .args(["--package", "function_missing", "--output", "json"])
        .output()
        .unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["packages"].as_array().unwrap().len(), 1);
    // Snapshots keep the crate name `x`; the version tells the members apart.
    assert_eq!(doc["packages"][0]["current_version"], "0.2.0");

    // One snapshot cannot stand in for two packages.
    let snap = tmp.path().join("old/crates/function_missing/snapshot.json");
    let out = run(&[
        "check-release",
        "--manifest-path",
        new.to_str().unwrap(),
        "--baseline-snapshot",
        snap.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_findings_round_trip_through_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let (manifest, baseline) = pair("motivating_auto_trait");
    let out = run(&[
        "check-release",
        "--manifest-path",
        &manifest,
        "--baseline-snapshot",
        &baseline,
        "--output",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report_path = tmp.path().join("report.json");
    std::fs::write(&report_path, &out.stdout).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["report_version"], 1);
    assert_eq!(report["packages"][0]["baseline_version"], "3.1.0");

    let wdir = tmp.path().join("w");
    let out = run(&[
        "witness",
        "--report",
        report_path.to_str().unwrap(),
        "--out",
        wdir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "auto_trait_impl_removed\tx::Bar\tconfirmed\nauto_trait_impl_removed\tx::Bar\tconfirmed\n"
    );
    assert_eq!(
        std::fs::read_to_string(wdir.join("outcomes.tsv")).unwrap(),
        stdout(&out)
    );
    assert!(wdir
        .join("x/3.1.0_3.2.0/auto_trait_impl_removed/1/src/lib.rs")
        .is_file());

    let echoed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(wdir.join("findings.json")).unwrap()).unwrap();
    assert_eq!(echoed, report["packages"][0]["findings"]);
}

#[test]
fn witness_with_a_command_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let (manifest, baseline) = pair("function_missing");
    let out = run(&[
        "check-release",
        "--manifest-path",
        &manifest,
        "--baseline-snapshot",
        &baseline,
        "--output",
        "json",
    ]);
    let report_path = tmp.path().join("report.json");
    std::fs::write(&report_path, &out.stdout).unwrap();
    // An oracle that builds everything cannot tell the sides apart.
    let out = run(&[
        "witness",
        "--report",
        report_path.to_str().unwrap(),
        "--out",
        tmp.path().join("w").to_str().unwrap(),
        "--oracle",
        "true",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(
        stdout(&out).ends_with("\tsuspected_false_positive\n"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn crater_subcommand_writes_goldens() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "crater",
        "--index",
        "fixtures/registry",
        "--config",
        "fixtures/crater/job.toml",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("9 records: 6 reported, 2 filtered as doc-hidden, 1 pairs not loadable"));
    for file in ["records.csv", "stats.csv"] {
        assert_eq!(
            std::fs::read(tmp.path().join(file)).unwrap(),
            std::fs::read(repo().join("fixtures/crater").join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn lints_listing() {
    let out = run(&["lints"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().count() >= 30);
    assert!(text.lines().any(|l| l.starts_with("auto_trait_impl_removed\tmajor\t")));
}
