//! One semver check: locate both snapshots, run the catalog over the pair,
//! drop findings on items outside the public API and compute a verdict.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use breakcheck_query::{execute_query, Value};
use rayon::prelude::*;
use semver::Version;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapter::SnapshotPairAdapter;
use crate::features::{resolve_features, FeatureConfig, FeatureError};
use crate::lints::{render_finding, Finding, LintDefinition};
use crate::manifest::{CrateManifest, ManifestError};
use crate::producer::{ProducerError, SnapshotProducer};
use crate::registry::{LocalIndex, Locator, RegistryError};
use crate::snapshot::{load_snapshot_file, ApiItem, ApiSnapshot, KindData, SnapshotError};
use crate::version::{compute_actual_bump, select_baseline, VersionBump, VersionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Producer(#[from] ProducerError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Version(#[from] VersionError),
    #[error("snapshot {path}: {source}")]
    Snapshot {
        path: String,
        #[source]
        source: SnapshotError,
    },
    #[error("lint `{lint_id}` failed: {message}")]
    Lint { lint_id: String, message: String },
    #[error("baseline is crate `{baseline}` but current is crate `{current}`")]
    CrateNameMismatch { baseline: String, current: String },
    #[error("version {version} of `{name}` is not in the registry")]
    VersionNotFound { name: String, version: Version },
    #[error("{0} is a remote locator; only local snapshots can be read")]
    RemoteLocator(String),
}

/// Where the baseline snapshot comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaselineSource {
    /// A snapshot file used as is.
    Snapshot(PathBuf),
    /// A crate directory (or its `Cargo.toml`) handed to the producer.
    Root(PathBuf),
    /// The newest suitable release in a registry index.
    Registry { index: PathBuf },
    /// One specific release in a registry index.
    Version { index: PathBuf, version: Version },
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    /// `Cargo.toml` of the current crate.
    pub current_manifest: PathBuf,
    pub baseline: BaselineSource,
    pub baseline_features: FeatureConfig,
    pub current_features: FeatureConfig,
    pub release_type_override: Option<VersionBump>,
    pub allow_prerelease_baseline: bool,
}

impl CheckConfig {
    pub fn new(current_manifest: impl Into<PathBuf>, baseline: BaselineSource) -> CheckConfig {
        CheckConfig {
            current_manifest: current_manifest.into(),
            baseline,
            baseline_features: FeatureConfig::default(),
            current_features: FeatureConfig::default(),
            release_type_override: None,
            allow_prerelease_baseline: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    Violations { required: VersionBump },
}

/// Violations when some finding needs more than `effective`; the required
/// bump is then the largest one any finding asks for.
pub fn verdict_for(findings: &[Finding], effective: VersionBump) -> Verdict {
    let required = findings.iter().map(|f| VersionBump::from(f.required_update)).max();
    match required {
        Some(r) if r > effective => Verdict::Violations { required: r },
        _ => Verdict::Ok,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintRun {
    pub lint_id: String,
    pub findings: usize,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub crate_name: String,
    pub baseline_version: Version,
    pub current_version: Version,
    /// `None` when an override was given and the versions do not increase.
    pub actual_bump: Option<VersionBump>,
    pub effective_bump: VersionBump,
    pub findings: Vec<Finding>,
    /// Findings on items outside the public API; never part of the verdict.
    pub hidden_findings: Vec<Finding>,
    pub lint_runs: Vec<LintRun>,
    pub verdict: Verdict,
    pub baseline_snapshot: Option<PathBuf>,
    pub current_snapshot: Option<PathBuf>,
    pub baseline_features: BTreeSet<String>,
    pub current_features: BTreeSet<String>,
}

struct LintOutput {
    lint_id: String,
    visible: Vec<(String, Finding)>,
    hidden: Vec<(String, Finding)>,
}

/// Runs every lint over the pair. Lints execute in parallel; the merge is
/// sort-based so the result does not depend on scheduling.
pub fn check_snapshots(
    baseline: &ApiSnapshot,
    current: &ApiSnapshot,
    catalog: &[LintDefinition],
    release_type_override: Option<VersionBump>,
) -> Result<CheckReport, CheckError> {
    if baseline.crate_name != current.crate_name {
        return Err(CheckError::CrateNameMismatch {
            baseline: baseline.crate_name.clone(),
            current: current.crate_name.clone(),
        });
    }
    let actual = compute_actual_bump(&baseline.crate_version, &current.crate_version);
    let (actual_bump, effective_bump) = match (actual, release_type_override) {
        (Ok(a), o) => (Some(a), o.unwrap_or(a)),
        (Err(_), Some(o)) => (None, o),
        (Err(e), None) => return Err(e.into()),
    };

    let adapter = SnapshotPairAdapter::new(baseline, current);
    let outputs = catalog
        .par_iter()
        .map(|lint| run_lint(lint, &adapter, baseline, current))
        .collect::<Result<Vec<_>, _>>()?;

    let mut findings = Vec::new();
    let mut hidden_findings = Vec::new();
    let mut lint_runs = Vec::new();
    for out in outputs {
        lint_runs.push(LintRun {
            lint_id: out.lint_id,
            findings: out.visible.len(),
        });
        findings.extend(out.visible);
        hidden_findings.extend(out.hidden);
    }
    lint_runs.sort_by(|a, b| a.lint_id.cmp(&b.lint_id));
    let findings = sort_findings(findings);
    let hidden_findings = sort_findings(hidden_findings);
    let verdict = verdict_for(&findings, effective_bump);

    Ok(CheckReport {
        crate_name: current.crate_name.clone(),
        baseline_version: baseline.crate_version.clone(),
        current_version: current.crate_version.clone(),
        actual_bump,
        effective_bump,
        findings,
        hidden_findings,
        lint_runs,
        verdict,
        baseline_snapshot: None,
        current_snapshot: None,
        baseline_features: BTreeSet::new(),
        current_features: BTreeSet::new(),
    })
}

fn sort_findings(mut findings: Vec<(String, Finding)>) -> Vec<Finding> {
    findings.sort_by(|(ra, a), (rb, b)| {
        (&a.lint_id, &a.item_path, ra)
            .cmp(&(&b.lint_id, &b.item_path, rb))
            .then_with(|| format!("{:?}", a.outputs).cmp(&format!("{:?}", b.outputs)))
    });
    findings.into_iter().map(|(_, f)| f).collect()
}

fn run_lint(
    lint: &LintDefinition,
    adapter: &SnapshotPairAdapter<'_>,
    baseline: &ApiSnapshot,
    current: &ApiSnapshot,
) -> Result<LintOutput, CheckError> {
    let fail = |message: String| CheckError::Lint {
        lint_id: lint.id.clone(),
        message,
    };
    let rows = execute_query(&lint.checked, adapter, &lint.arguments).map_err(|e| fail(e.to_string()))?;
    let mut out = LintOutput {
        lint_id: lint.id.clone(),
        visible: Vec::new(),
        hidden: Vec::new(),
    };
    for row in rows {
        let row = row.map_err(|e| fail(e.to_string()))?;
        let rendered = render_finding(lint, &row);
        let finding = Finding::from_row(lint, row);
        if is_hidden(&finding, baseline, current) {
            out.hidden.push((rendered, finding));
        } else {
            out.visible.push((rendered, finding));
        }
    }
    Ok(out)
}

const MEMBER_OUTPUTS: [&str; 3] = ["variant_name", "field_name", "method_name"];

/// Whether a finding concerns an item that is not public API: the owner at
/// the reported path, or the named member of it, is doc-hidden or otherwise
/// unreachable. The owner is looked up in the baseline first.
pub fn is_hidden(finding: &Finding, baseline: &ApiSnapshot, current: &ApiSnapshot) -> bool {
    let owners: Vec<(&ApiSnapshot, &ApiItem)> = [baseline, current]
        .into_iter()
        .filter_map(|s| s.item_at_path(&finding.item_path).map(|i| (s, i)))
        .collect();
    let Some(&(snapshot, owner)) = owners.first() else {
        return false;
    };
    if !snapshot.is_public_api(&owner.id).unwrap_or(false) {
        return true;
    }
    for key in MEMBER_OUTPUTS {
        let Some(Value::Text(name)) = finding.outputs.get(key) else {
            continue;
        };
        let member = owners.iter().find_map(|(s, o)| find_member(s, o, key, name));
        if member.is_some_and(|m| m.doc_hidden) {
            return true;
        }
    }
    false
}

fn find_member<'s>(snapshot: &'s ApiSnapshot, owner: &ApiItem, key: &str, name: &str) -> Option<&'s ApiItem> {
    let named = |ids: &[String]| {
        ids.iter()
            .filter_map(|id| snapshot.items.get(id))
            .find(|i| i.name == name)
    };
    match key {
        "variant_name" => named(owner.variants()),
        "field_name" => named(owner.fields()).or_else(|| {
            owner
                .variants()
                .iter()
                .filter_map(|v| snapshot.items.get(v))
                .find_map(|v| named(v.fields()))
        }),
        "method_name" => {
            if let KindData::Trait { methods, .. } = &owner.data {
                return named(methods);
            }
            owner
                .impls()
                .iter()
                .filter_map(|i| snapshot.items.get(i))
                .find_map(|i| named(i.methods()))
        }
        _ => None,
    }
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("Cargo.toml")
    } else {
        p.to_path_buf()
    }
}

fn crate_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn local(locator: &Locator) -> Result<&Path, CheckError> {
    locator
        .as_path()
        .ok_or_else(|| CheckError::RemoteLocator(locator.to_string()))
}

/// Resolves both sides of `config` and checks them.
pub fn run_check(
    config: &CheckConfig,
    catalog: &[LintDefinition],
    producer: &dyn SnapshotProducer,
) -> Result<CheckReport, CheckError> {
    let current_manifest_path = manifest_path(&config.current_manifest);
    let current_manifest = CrateManifest::load(&current_manifest_path)?;
    let current_features = resolve_features(&current_manifest, &config.current_features)?;
    let current_dir = crate_dir(&current_manifest_path);
    let current = producer.produce(&current_dir, &current_features)?;
    let current_snapshot = producer.snapshot_path(&current_dir, &current_features);

    let (baseline, baseline_snapshot, baseline_features) = match &config.baseline {
        BaselineSource::Snapshot(path) => {
            let s = load_snapshot_file(path).map_err(|source| CheckError::Snapshot {
                path: path.display().to_string(),
                source,
            })?;
            (s, Some(path.clone()), BTreeSet::new())
        }
        BaselineSource::Root(root) => {
            let mpath = manifest_path(root);
            let manifest = CrateManifest::load(&mpath)?;
            let features = resolve_features(&manifest, &config.baseline_features)?;
            let dir = crate_dir(&mpath);
            let s = producer.produce(&dir, &features)?;
            let path = producer.snapshot_path(&dir, &features);
            (s, path, features)
        }
        BaselineSource::Registry { index } | BaselineSource::Version { index, .. } => {
            let index = LocalIndex::new(index);
            let releases = index.list_releases(&current_manifest.name)?;
            let entry =
                match &config.baseline {
                    BaselineSource::Version { version, .. } => releases
                        .iter()
                        .find(|r| r.version == *version)
                        .ok_or_else(|| CheckError::VersionNotFound {
                            name: current_manifest.name.clone(),
                            version: version.clone(),
                        })?,
                    _ => select_baseline(&releases, &current_manifest.version, config.allow_prerelease_baseline)?,
                };
            let manifest = CrateManifest::load(local(&entry.manifest)?)?;
            let features = resolve_features(&manifest, &config.baseline_features)?;
            let path = local(&entry.snapshot)?.to_path_buf();
            let s = load_snapshot_file(&path).map_err(|source| CheckError::Snapshot {
                path: path.display().to_string(),
                source,
            })?;
            (s, Some(path), features)
        }
    };

    let mut report = check_snapshots(&baseline, &current, catalog, config.release_type_override)?;
    report.baseline_snapshot = baseline_snapshot;
    report.current_snapshot = current_snapshot;
    report.baseline_features = baseline_features;
    report.current_features = current_features;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lints::RequiredUpdate;
    use breakcheck_query::OutputRow;

    fn finding(update: RequiredUpdate) -> Finding {
        Finding {
            lint_id: "l".into(),
            required_update: update,
            item_path: vec!["x".into()],
            span: None,
            outputs: OutputRow::new(),
        }
    }

    #[test]
    fn verdict_uses_strict_comparison() {
        let minor = [finding(RequiredUpdate::Minor)];
        assert_eq!(verdict_for(&minor, VersionBump::Minor), Verdict::Ok);
        assert_eq!(
            verdict_for(&minor, VersionBump::Patch),
            Verdict::Violations {
                required: VersionBump::Minor
            }
        );
        let both = [finding(RequiredUpdate::Minor), finding(RequiredUpdate::Major)];
        assert_eq!(
            verdict_for(&both, VersionBump::Minor),
            Verdict::Violations {
                required: VersionBump::Major
            }
        );
        assert_eq!(verdict_for(&[], VersionBump::Patch), Verdict::Ok);
    }

    mod monotonicity {
        use super::*;
        use proptest::prelude::*;

        fn update() -> impl Strategy<Value = RequiredUpdate> {
            prop_oneof![Just(RequiredUpdate::Minor), Just(RequiredUpdate::Major)]
        }

        fn bump() -> impl Strategy<Value = VersionBump> {
            prop_oneof![
                Just(VersionBump::Patch),
                Just(VersionBump::Minor),
                Just(VersionBump::Major)
            ]
        }

        proptest! {
            #[test]
            fn adding_findings_never_clears_violations(
                updates in prop::collection::vec(update(), 0..6),
                extra in update(),
                effective in bump(),
            ) {
                let mut fs: Vec<Finding> = updates.into_iter().map(finding).collect();
                let before = verdict_for(&fs, effective);
                fs.push(finding(extra));
                let after = verdict_for(&fs, effective);
                if before != Verdict::Ok {
                    prop_assert_ne!(after, Verdict::Ok);
                }
            }

            #[test]
            fn raising_the_bump_never_creates_violations(
                updates in prop::collection::vec(update(), 0..6),
                a in bump(),
                b in bump(),
            ) {
                let fs: Vec<Finding> = updates.into_iter().map(finding).collect();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                if verdict_for(&fs, lo) == Verdict::Ok {
                    prop_assert_eq!(verdict_for(&fs, hi), Verdict::Ok);
                }
            }
        }
    }
}
