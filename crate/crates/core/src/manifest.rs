//! Reading the subset of `Cargo.toml` the checker needs: package identity,
//! the feature graph and the dependency list.

use std::collections::BTreeMap;
use std::path::Path;

use semver::Version;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid manifest: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dependency {
    pub name: String,
    pub requirement: String,
    pub optional: bool,
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrateManifest {
    pub name: String,
    pub version: Version,
    pub features: BTreeMap<String, Vec<String>>,
    pub dependencies: Vec<Dependency>,
    /// Workspace member directories, for virtual or root manifests.
    pub workspace_members: Vec<String>,
    /// False for a virtual workspace manifest with no `[package]`.
    pub has_package: bool,
}

#[derive(Deserialize)]
struct RawManifest {
    package: Option<RawPackage>,
    #[serde(default)]
    features: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    dependencies: BTreeMap<String, RawDependency>,
    #[serde(default)]
    target: BTreeMap<String, RawTarget>,
    workspace: Option<RawWorkspace>,
}

#[derive(Deserialize)]
struct RawPackage {
    name: String,
    version: String,
}

#[derive(Deserialize)]
struct RawWorkspace {
    #[serde(default)]
    members: Vec<String>,
}

#[derive(Deserialize)]
struct RawTarget {
    #[serde(default)]
    dependencies: BTreeMap<String, RawDependency>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDependency {
    Version(String),
    Detailed {
        version: Option<String>,
        #[serde(default)]
        optional: bool,
    },
}

impl CrateManifest {
    pub fn parse(text: &str) -> Result<CrateManifest, ManifestError> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| ManifestError::Invalid(e.to_string()))?;
        let workspace_members = raw.workspace.map(|w| w.members).unwrap_or_default();
        let Some(package) = raw.package else {
            if workspace_members.is_empty() {
                return Err(ManifestError::Invalid("missing [package] table".into()));
            }
            return Ok(CrateManifest {
                name: String::new(),
                version: Version::new(0, 0, 0),
                features: BTreeMap::new(),
                dependencies: Vec::new(),
                workspace_members,
                has_package: false,
            });
        };
        let version = Version::parse(&package.version)
            .map_err(|e| ManifestError::Invalid(format!("package.version `{}`: {e}", package.version)))?;

        let mut dependencies = Vec::new();
        let mut push = |deps: BTreeMap<String, RawDependency>, target: Option<&str>| {
            for (name, dep) in deps {
                let (requirement, optional) = match dep {
                    RawDependency::Version(v) => (v, false),
                    RawDependency::Detailed { version, optional } => (version.unwrap_or_else(|| "*".into()), optional),
                };
                dependencies.push(Dependency {
                    name,
                    requirement,
                    optional,
                    target: target.map(str::to_string),
                });
            }
        };
        push(raw.dependencies, None);
        for (cfg, t) in raw.target {
            push(t.dependencies, Some(&cfg));
        }

        let manifest = CrateManifest {
            name: package.name,
            version,
            features: raw.features,
            dependencies,
            workspace_members,
            has_package: true,
        };
        manifest.validate_features()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<CrateManifest, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|e| ManifestError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        CrateManifest::parse(&text)
    }

    pub fn dependency(&self, name: &str) -> Option<&Dependency> {
        self.dependencies.iter().find(|d| d.name == name)
    }

    /// Declared feature names plus the implicit features of optional
    /// dependencies that are not hidden behind `dep:` syntax.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.features.keys().cloned().collect();
        let uses_dep_syntax = |dep: &str| {
            self.features
                .values()
                .flatten()
                .any(|e| e.strip_prefix("dep:") == Some(dep))
        };
        for d in &self.dependencies {
            if d.optional && !uses_dep_syntax(&d.name) && !names.contains(&d.name) {
                names.push(d.name.clone());
            }
        }
        names.sort();
        names
    }

    fn validate_features(&self) -> Result<(), ManifestError> {
        for (feature, entries) in &self.features {
            for entry in entries {
                let ok = if let Some(dep) = entry.strip_prefix("dep:") {
                    self.dependency(dep).is_some_and(|d| d.optional)
                } else if let Some((dep, _)) = entry.split_once('/') {
                    self.dependency(dep.trim_end_matches('?')).is_some()
                } else {
                    self.features.contains_key(entry) || self.dependency(entry).is_some_and(|d| d.optional)
                };
                if !ok {
                    return Err(ManifestError::Invalid(format!(
                        "feature `{feature}` enables unknown feature or dependency `{entry}`"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
[package]
name = "x"
version = "0.1.0"

[features]
default = ["serde"]
serde = ["dep:serde", "derive"]
derive = []
unstable = []

[dependencies]
serde = { version = "1", optional = true }
log = "0.4"

[target.'cfg(unix)'.dependencies]
libc = "0.2"
"#;

    #[test]
    fn parses_features_and_dependencies() {
        let m = CrateManifest::parse(TEXT).unwrap();
        assert_eq!(m.name, "x");
        assert_eq!(m.version, Version::new(0, 1, 0));
        assert_eq!(m.features["serde"], ["dep:serde", "derive"]);
        assert!(m.dependency("serde").unwrap().optional);
        assert_eq!(m.dependency("libc").unwrap().target.as_deref(), Some("cfg(unix)"));
        assert_eq!(m.feature_names(), ["default", "derive", "serde", "unstable"]);
    }

    #[test]
    fn rejects_dangling_feature_references() {
        let bad = TEXT.replace("derive = []", "derive = [\"nope\"]");
        assert!(matches!(CrateManifest::parse(&bad), Err(ManifestError::Invalid(m)) if m.contains("nope")));
    }

    #[test]
    fn virtual_workspace_manifest() {
        let m = CrateManifest::parse("[workspace]\nmembers = [\"a\", \"b\"]\n").unwrap();
        assert!(!m.has_package);
        assert_eq!(m.workspace_members, ["a", "b"]);
    }
}
