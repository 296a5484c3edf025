//! Version arithmetic: classifying the bump between two releases and picking
//! a baseline release.

use std::fmt;
use std::str::FromStr;

use semver::Version;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lints::RequiredUpdate;
use crate::registry::RegistryEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VersionBump {
    Patch,
    Minor,
    Major,
}

impl VersionBump {
    pub fn as_str(self) -> &'static str {
        match self {
            VersionBump::Patch => "patch",
            VersionBump::Minor => "minor",
            VersionBump::Major => "major",
        }
    }
}

impl fmt::Display for VersionBump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VersionBump {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "patch" => Ok(VersionBump::Patch),
            "minor" => Ok(VersionBump::Minor),
            "major" => Ok(VersionBump::Major),
            other => Err(format!(
                "unknown release type `{other}` (expected major, minor or patch)"
            )),
        }
    }
}

impl From<RequiredUpdate> for VersionBump {
    fn from(r: RequiredUpdate) -> Self {
        match r {
            RequiredUpdate::Minor => VersionBump::Minor,
            RequiredUpdate::Major => VersionBump::Major,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VersionError {
    #[error("current version {current} is older than baseline {baseline}")]
    VersionsNotIncreasing { baseline: Version, current: Version },
    #[error("no usable baseline release: every candidate is yanked or a pre-release")]
    NoUsableBaseline,
}

/// Classifies `baseline -> current`. A change at or left of the baseline's
/// leftmost non-zero component is major, one component to its right is
/// minor, anything else is a patch. Pre-release and build tags only matter
/// for the ordering check.
pub fn compute_actual_bump(baseline: &Version, current: &Version) -> Result<VersionBump, VersionError> {
    if current < baseline {
        return Err(VersionError::VersionsNotIncreasing {
            baseline: baseline.clone(),
            current: current.clone(),
        });
    }
    let b = [baseline.major, baseline.minor, baseline.patch];
    let c = [current.major, current.minor, current.patch];
    let leftmost = b.iter().position(|&x| x != 0).unwrap_or(2);
    Ok(match (0..3).find(|&i| b[i] != c[i]) {
        None => VersionBump::Patch,
        Some(i) if i <= leftmost => VersionBump::Major,
        Some(i) if i == leftmost + 1 => VersionBump::Minor,
        Some(_) => VersionBump::Patch,
    })
}

/// Picks the greatest eligible release strictly older than `current`, or the
/// greatest eligible release if none is older. Yanked releases are never
/// eligible; pre-releases only when `allow_prerelease` is set.
pub fn select_baseline<'e>(
    releases: &'e [RegistryEntry],
    current: &Version,
    allow_prerelease: bool,
) -> Result<&'e RegistryEntry, VersionError> {
    let eligible = || {
        releases
            .iter()
            .filter(move |r| !r.yanked && (allow_prerelease || r.version.pre.is_empty()))
    };
    eligible()
        .filter(|r| r.version < *current)
        .max_by(|a, b| a.version.cmp(&b.version))
        .or_else(|| eligible().max_by(|a, b| a.version.cmp(&b.version)))
        .ok_or(VersionError::NoUsableBaseline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use semver::VersionReq;

    fn v(s: &str) -> Version {
        Version::parse(s).unwrap()
    }

    fn bump(a: &str, b: &str) -> VersionBump {
        compute_actual_bump(&v(a), &v(b)).unwrap()
    }

    fn entry(version: &str, yanked: bool) -> RegistryEntry {
        RegistryEntry::for_tests("x", version, yanked)
    }

    #[test]
    fn positional_rule() {
        assert_eq!(bump("1.2.3", "2.0.0"), VersionBump::Major);
        assert_eq!(bump("0.3.1", "0.4.0"), VersionBump::Major);
        assert_eq!(bump("0.3.1", "0.3.2"), VersionBump::Minor);
        assert_eq!(bump("1.2.3", "1.2.4"), VersionBump::Patch);
        assert_eq!(bump("0.0.5", "0.0.6"), VersionBump::Major);
        assert_eq!(bump("1.2.3", "1.3.0"), VersionBump::Minor);
        assert_eq!(bump("1.2.3", "1.2.3"), VersionBump::Patch);
        assert_eq!(bump("1.0.0-alpha.1", "1.0.0"), VersionBump::Patch);
        assert_eq!(bump("0.9.0", "1.0.0-rc.1"), VersionBump::Major);
    }

    #[test]
    fn decreasing_versions_are_rejected() {
        assert!(matches!(
            compute_actual_bump(&v("1.0.0"), &v("1.0.0-rc.1")),
            Err(VersionError::VersionsNotIncreasing { .. })
        ));
    }

    #[test]
    fn baseline_selection() {
        let rs = [entry("1.0.0", false), entry("1.1.0", true), entry("1.2.0", false)];
        assert_eq!(select_baseline(&rs, &v("1.3.0"), false).unwrap().version, v("1.2.0"));
        let rs = [entry("1.0.0", false), entry("1.1.0", true)];
        assert_eq!(select_baseline(&rs, &v("1.2.0"), false).unwrap().version, v("1.0.0"));
        let rs = [entry("1.0.0", true)];
        assert_eq!(
            select_baseline(&rs, &v("1.2.0"), false),
            Err(VersionError::NoUsableBaseline)
        );
        // Nothing older: fall back to the newest eligible release.
        let rs = [entry("2.0.0", false), entry("3.0.0", false)];
        assert_eq!(select_baseline(&rs, &v("1.0.0"), false).unwrap().version, v("3.0.0"));
    }

    #[test]
    fn prerelease_baselines_need_opt_in() {
        let rs = [entry("1.0.0", false), entry("1.1.0-beta.1", false)];
        assert_eq!(select_baseline(&rs, &v("1.1.0"), false).unwrap().version, v("1.0.0"));
        assert_eq!(
            select_baseline(&rs, &v("1.1.0"), true).unwrap().version,
            v("1.1.0-beta.1")
        );
    }

    fn version_strategy() -> impl Strategy<Value = Version> {
        (0u64..4, 0u64..4, 0u64..4, prop::option::of(0u64..3)).prop_map(|(a, b, c, pre)| {
            let mut ver = Version::new(a, b, c);
            if let Some(n) = pre {
                ver.pre = semver::Prerelease::new(&format!("rc.{n}")).unwrap();
            }
            ver
        })
    }

    proptest! {
        #[test]
        fn major_iff_caret_requirement_fails(a in version_strategy(), b in version_strategy()) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let bump = compute_actual_bump(&lo, &hi).unwrap();
            let strip = |x: &Version| Version::new(x.major, x.minor, x.patch);
            let req = VersionReq::parse(&format!("^{}", strip(&lo))).unwrap();
            prop_assert_eq!(bump == VersionBump::Major, !req.matches(&strip(&hi)));
        }

        #[test]
        fn selected_baseline_is_maximal_and_not_yanked(
            rels in prop::collection::vec((version_strategy(), any::<bool>()), 1..12),
            current in version_strategy(),
        ) {
            let mut entries: Vec<RegistryEntry> = Vec::new();
            for (ver, yanked) in rels {
                if entries.iter().all(|e| e.version != ver) {
                    entries.push(RegistryEntry::for_tests("x", &ver.to_string(), yanked));
                }
            }
            match select_baseline(&entries, &current, true) {
                Ok(chosen) => {
                    prop_assert!(!chosen.yanked);
                    let older: Vec<_> = entries.iter().filter(|e| !e.yanked && e.version < current).collect();
                    let pool: Vec<_> = if older.is_empty() {
                        entries.iter().filter(|e| !e.yanked).collect()
                    } else {
                        older
                    };
                    prop_assert!(pool.iter().all(|e| e.version <= chosen.version));
                }
                Err(_) => prop_assert!(entries.iter().all(|e| e.yanked)),
            }
        }
    }
}
