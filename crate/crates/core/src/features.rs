//! Choosing which cargo features a snapshot is produced with.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::manifest::CrateManifest;

/// Feature names that usually gate unfinished or unstable API.
pub const DENY_LIST: [&str; 5] = ["unstable", "nightly", "experimental", "bench", "internal"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    /// Every feature except the ones that look unstable or private.
    #[default]
    HeuristicDefault,
    All,
    /// Only `default` and what it implies.
    NonePlusDefaults,
    /// Only the explicit list and what it implies.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureConfig {
    pub mode: FeatureMode,
    pub explicit_list: Vec<String>,
    pub extra_deny_tokens: Vec<String>,
}

impl FeatureConfig {
    pub fn new(mode: FeatureMode) -> FeatureConfig {
        FeatureConfig {
            mode,
            ..FeatureConfig::default()
        }
    }

    pub fn with_features(mut self, names: impl IntoIterator<Item = impl Into<String>>) -> FeatureConfig {
        self.explicit_list.extend(names.into_iter().map(Into::into));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
}

fn denied(name: &str, extra: &[String]) -> bool {
    DENY_LIST.contains(&name)
        || name.starts_with("unstable-")
        || name.starts_with('_')
        || extra.iter().any(|t| t == name)
}

/// Adds every feature transitively enabled by `set`. `dep:` entries and
/// dependency feature references like `serde/std` only contribute the
/// implicit feature of the dependency, when one exists.
pub fn feature_closure(manifest: &CrateManifest, set: &mut BTreeSet<String>) {
    let names: BTreeSet<String> = manifest.feature_names().into_iter().collect();
    let mut stack: Vec<String> = set.iter().cloned().collect();
    while let Some(feature) = stack.pop() {
        let Some(entries) = manifest.features.get(&feature) else {
            continue;
        };
        for entry in entries {
            let implied = if entry.starts_with("dep:") {
                None
            } else if let Some((dep, _)) = entry.split_once('/') {
                (!dep.ends_with('?')).then_some(dep)
            } else {
                Some(entry.as_str())
            };
            if let Some(f) = implied {
                if names.contains(f) && set.insert(f.to_string()) {
                    stack.push(f.to_string());
                }
            }
        }
    }
}

pub fn resolve_features(manifest: &CrateManifest, config: &FeatureConfig) -> Result<BTreeSet<String>, FeatureError> {
    let names = manifest.feature_names();
    if let Some(unknown) = config.explicit_list.iter().find(|f| !names.contains(f)) {
        return Err(FeatureError::UnknownFeature(unknown.clone()));
    }
    let mut set: BTreeSet<String> = match config.mode {
        FeatureMode::All => names.iter().cloned().collect(),
        FeatureMode::HeuristicDefault => names
            .iter()
            .filter(|n| !denied(n, &config.extra_deny_tokens))
            .cloned()
            .collect(),
        FeatureMode::NonePlusDefaults => names.iter().filter(|n| *n == "default").cloned().collect(),
        FeatureMode::Explicit => BTreeSet::new(),
    };
    set.extend(config.explicit_list.iter().cloned());
    feature_closure(manifest, &mut set);
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(features: &str) -> CrateManifest {
        CrateManifest::parse(&format!(
            "[package]\nname = \"x\"\nversion = \"1.0.0\"\n\n[features]\n{features}\n\n[dependencies]\nserde_crate = {{ version = \"1\", optional = true }}\nlog = {{ version = \"0.4\", optional = true }}\n"
        ))
        .unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    const BASIC: &str = "default = [\"serde\"]\nserde = [\"dep:serde_crate\"]\nunstable = []";

    #[test]
    fn heuristic_drops_deny_listed_names() {
        let m = manifest(BASIC);
        let got = resolve_features(&m, &FeatureConfig::default()).unwrap();
        // `log` is an implicit feature of the optional dependency.
        assert_eq!(got, set(&["default", "log", "serde"]));
    }

    #[test]
    fn all_mode_keeps_everything() {
        let m = manifest(BASIC);
        let got = resolve_features(&m, &FeatureConfig::new(FeatureMode::All)).unwrap();
        assert_eq!(got, set(&["default", "log", "serde", "unstable"]));
    }

    #[test]
    fn explicit_mode_takes_the_closure() {
        let m = manifest("serde = [\"derive\", \"dep:serde_crate\"]\nderive = [\"std\"]\nstd = []");
        let cfg = FeatureConfig::new(FeatureMode::Explicit).with_features(["serde"]);
        assert_eq!(resolve_features(&m, &cfg).unwrap(), set(&["derive", "serde", "std"]));
    }

    #[test]
    fn deny_rule_edge_cases() {
        let m =
            manifest("unstable-api = []\n_private = []\nunstable_thing = []\nbenchmarks = []\nnightly = []\nfast = []");
        let cfg = FeatureConfig {
            extra_deny_tokens: vec!["fast".into()],
            ..FeatureConfig::default()
        };
        assert_eq!(
            resolve_features(&m, &cfg).unwrap(),
            set(&["benchmarks", "log", "serde_crate", "unstable_thing"])
        );
    }

    #[test]
    fn defaults_mode_and_explicit_union() {
        let m = manifest(BASIC);
        let cfg = FeatureConfig::new(FeatureMode::NonePlusDefaults).with_features(["unstable"]);
        assert_eq!(
            resolve_features(&m, &cfg).unwrap(),
            set(&["default", "serde", "unstable"])
        );
        let bad = FeatureConfig::new(FeatureMode::Explicit).with_features(["nope"]);
        assert_eq!(
            resolve_features(&m, &bad),
            Err(FeatureError::UnknownFeature("nope".into()))
        );
    }

    #[test]
    fn dependency_feature_references_enable_implicit_features() {
        let m = manifest("logging = [\"log/std\"]\nquiet = [\"log?/max_level_off\"]");
        let cfg = FeatureConfig::new(FeatureMode::Explicit).with_features(["logging", "quiet"]);
        assert_eq!(resolve_features(&m, &cfg).unwrap(), set(&["log", "logging", "quiet"]));
    }
}
