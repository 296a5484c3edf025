//! A local package index laid out like the crates.io sparse index.
//!
//! Each crate has one file of newline-delimited JSON records:
//!
//! ```text
//! {"name":"x","vers":"0.1.0","yanked":false,"published_at":"2018-04-01","snapshot":"snapshots/x/0.1.0/snapshot.json","manifest":"snapshots/x/0.1.0/Cargo.toml"}
//! ```
//!
//! `snapshot` and `manifest` are paths relative to the index root, or
//! absolute `http(s)://` URLs. A top-level `crates.txt` lists crate names in
//! download-rank order.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use semver::Version;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("invalid crate name `{0}`")]
    InvalidCrateName(String),
    #[error("crate `{0}` is not in the index")]
    CrateNotFound(String),
    #[error("{file}:{line}: malformed index record: {message}")]
    MalformedIndexRecord { file: String, line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Locator {
    Path(PathBuf),
    Url(String),
}

impl Locator {
    fn parse(root: &Path, raw: &str) -> Locator {
        if raw.starts_with("http://") || raw.starts_with("https://") {
            Locator::Url(raw.to_string())
        } else {
            Locator::Path(root.join(raw))
        }
    }

    pub fn as_path(&self) -> Option<&Path> {
        match self {
            Locator::Path(p) => Some(p),
            Locator::Url(_) => None,
        }
    }
}

impl std::fmt::Display for Locator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Locator::Path(p) => write!(f, "{}", p.display()),
            Locator::Url(u) => f.write_str(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub name: String,
    pub version: Version,
    pub yanked: bool,
    pub published_at: NaiveDate,
    pub snapshot: Locator,
    pub manifest: Locator,
}

impl RegistryEntry {
    #[doc(hidden)]
    pub fn for_tests(name: &str, version: &str, yanked: bool) -> RegistryEntry {
        RegistryEntry {
            name: name.to_string(),
            version: Version::parse(version).expect("valid test version"),
            yanked,
            published_at: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
            snapshot: Locator::Path(PathBuf::from("snapshot.json")),
            manifest: Locator::Path(PathBuf::from("Cargo.toml")),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    name: String,
    vers: String,
    #[serde(default)]
    yanked: bool,
    published_at: String,
    snapshot: String,
    manifest: String,
}

fn valid_crate_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        && name.len() <= 64
}

/// Relative location of a crate's index file.
pub fn index_path_for(name: &str) -> Result<String, RegistryError> {
    if !valid_crate_name(name) {
        return Err(RegistryError::InvalidCrateName(name.to_string()));
    }
    let n = name.to_ascii_lowercase();
    Ok(match n.len() {
        1 => format!("1/{n}"),
        2 => format!("2/{n}"),
        3 => format!("3/{}/{n}", &n[..1]),
        _ => format!("{}/{}/{n}", &n[..2], &n[2..4]),
    })
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .or_else(|| chrono::DateTime::parse_from_rfc3339(raw).ok().map(|d| d.date_naive()))
}

/// Parses the body of one index file. `file` only labels errors.
pub fn parse_index_file(root: &Path, file: &str, name: &str, text: &str) -> Result<Vec<RegistryEntry>, RegistryError> {
    let mut entries: Vec<RegistryEntry> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| RegistryError::MalformedIndexRecord {
            file: file.to_string(),
            line: line_no,
            message,
        };
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if !raw.name.eq_ignore_ascii_case(name) {
            return Err(bad(format!("record names crate `{}`", raw.name)));
        }
        let version = Version::parse(&raw.vers).map_err(|e| bad(format!("version `{}`: {e}", raw.vers)))?;
        let published_at = parse_date(&raw.published_at).ok_or_else(|| bad(format!("date `{}`", raw.published_at)))?;
        if entries.iter().any(|e| e.version == version) {
            return Err(bad(format!("duplicate version {version}")));
        }
        entries.push(RegistryEntry {
            name: raw.name,
            version,
            yanked: raw.yanked,
            published_at,
            snapshot: Locator::parse(root, &raw.snapshot),
            manifest: Locator::parse(root, &raw.manifest),
        });
    }
    entries.sort_by(|a, b| a.version.cmp(&b.version));
    Ok(entries)
}

#[derive(Debug, Clone)]
pub struct LocalIndex {
    root: PathBuf,
}

impl LocalIndex {
    pub fn new(root: impl Into<PathBuf>) -> LocalIndex {
        LocalIndex { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// All releases of `name` in ascending version order, yanked included.
    pub fn list_releases(&self, name: &str) -> Result<Vec<RegistryEntry>, RegistryError> {
        let rel = index_path_for(name)?;
        let path = self.root.join(&rel);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(RegistryError::CrateNotFound(name.to_string()))
            }
            Err(e) => {
                return Err(RegistryError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })
            }
        };
        parse_index_file(&self.root, &rel, name, &text)
    }

    /// Crate names from `crates.txt`, most downloaded first.
    pub fn ranked_crates(&self) -> Result<Vec<String>, RegistryError> {
        let path = self.root.join("crates.txt");
        let text = std::fs::read_to_string(&path).map_err(|e| RegistryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect())
    }
}

/// Fetching index files over HTTP from a sparse-index base URL.
#[cfg(feature = "http")]
pub mod http {
    use super::*;

    pub struct HttpIndex {
        base_url: String,
    }

    impl HttpIndex {
        pub fn new(base_url: impl Into<String>) -> HttpIndex {
            HttpIndex {
                base_url: base_url.into().trim_end_matches('/').to_string(),
            }
        }

        pub fn list_releases(&self, name: &str) -> Result<Vec<RegistryEntry>, RegistryError> {
            let rel = index_path_for(name)?;
            let url = format!("{}/{rel}", self.base_url);
            let response = ureq::get(&url).call();
            let text = match response {
                Ok(mut r) => r.body_mut().read_to_string().map_err(|e| RegistryError::Io {
                    path: url.clone(),
                    message: e.to_string(),
                })?,
                Err(ureq::Error::StatusCode(404)) => return Err(RegistryError::CrateNotFound(name.to_string())),
                Err(e) => {
                    return Err(RegistryError::Io {
                        path: url,
                        message: e.to_string(),
                    })
                }
            };
            parse_index_file(Path::new(""), &rel, name, &text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn layout_rule() {
        assert_eq!(index_path_for("a").unwrap(), "1/a");
        assert_eq!(index_path_for("ab").unwrap(), "2/ab");
        assert_eq!(index_path_for("abc").unwrap(), "3/a/abc");
        assert_eq!(index_path_for("serde").unwrap(), "se/rd/serde");
        assert_eq!(index_path_for("Serde_JSON").unwrap(), "se/rd/serde_json");
        assert!(matches!(index_path_for(""), Err(RegistryError::InvalidCrateName(_))));
        assert!(matches!(
            index_path_for("9lives"),
            Err(RegistryError::InvalidCrateName(_))
        ));
        assert!(matches!(index_path_for("a/b"), Err(RegistryError::InvalidCrateName(_))));
    }

    #[test]
    fn layout_is_injective_over_lowercase_names() {
        let names = ["a", "b", "ab", "abc", "abd", "abcd", "abcde", "abce", "ab-c", "ab_c"];
        let paths: BTreeSet<_> = names.iter().map(|n| index_path_for(n).unwrap()).collect();
        assert_eq!(paths.len(), names.len());
    }

    fn record(vers: &str, yanked: bool) -> String {
        format!(
            r#"{{"name":"x","vers":"{vers}","yanked":{yanked},"published_at":"2020-02-01","snapshot":"s/{vers}.json","manifest":"m/{vers}.toml"}}"#
        )
    }

    #[test]
    fn lists_releases_in_version_order() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("1")).unwrap();
        let body = [record("1.0.0", false), record("0.1.0", false), record("0.2.0", true)].join("\n");
        std::fs::write(dir.path().join("1/x"), body).unwrap();
        let index = LocalIndex::new(dir.path());
        let rs = index.list_releases("x").unwrap();
        let versions: Vec<String> = rs.iter().map(|r| r.version.to_string()).collect();
        assert_eq!(versions, ["0.1.0", "0.2.0", "1.0.0"]);
        assert!(rs[1].yanked);
        assert_eq!(rs[0].snapshot, Locator::Path(dir.path().join("s/0.1.0.json")));
        assert!(matches!(index.list_releases("y"), Err(RegistryError::CrateNotFound(_))));
    }

    #[test]
    fn truncated_record_is_an_error() {
        let body = format!("{}\n{}", record("0.1.0", false), &record("0.2.0", false)[..30]);
        let err = parse_index_file(Path::new("."), "1/x", "x", &body).unwrap_err();
        assert!(matches!(err, RegistryError::MalformedIndexRecord { line: 2, .. }));
    }

    #[test]
    fn rfc3339_dates_are_accepted() {
        let body = record("0.1.0", false).replace("2020-02-01", "2020-02-01T10:00:00Z");
        let rs = parse_index_file(Path::new("."), "1/x", "x", &body).unwrap();
        assert_eq!(rs[0].published_at, NaiveDate::from_ymd_opt(2020, 2, 1).unwrap());
    }
}
