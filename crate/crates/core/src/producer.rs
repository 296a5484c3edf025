//! Where snapshots come from. The checker never builds crates itself; a
//! [`SnapshotProducer`] turns a crate directory plus a feature set into an
//! [`ApiSnapshot`].

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::snapshot::{load_snapshot_file, ApiSnapshot, SnapshotError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProducerError {
    #[error("snapshot for {crate_dir}: {source}")]
    Snapshot {
        crate_dir: String,
        #[source]
        source: SnapshotError,
    },
    #[error("snapshot command failed for {crate_dir}: {message}")]
    Command { crate_dir: String, message: String },
}

pub trait SnapshotProducer: Send + Sync {
    /// Produces the snapshot of the crate whose manifest lives in
    /// `crate_dir`, as built with `features`.
    fn produce(&self, crate_dir: &Path, features: &BTreeSet<String>) -> Result<ApiSnapshot, ProducerError>;

    /// The file the snapshot was read from, when there is one.
    fn snapshot_path(&self, _crate_dir: &Path, _features: &BTreeSet<String>) -> Option<PathBuf> {
        None
    }
}

/// Reads a pre-built `snapshot.json` next to the manifest. The feature set
/// is not consulted because the file already fixes it.
#[derive(Debug, Default, Clone)]
pub struct FileSnapshotProducer;

pub const SNAPSHOT_FILE_NAME: &str = "snapshot.json";

impl SnapshotProducer for FileSnapshotProducer {
    fn produce(&self, crate_dir: &Path, _features: &BTreeSet<String>) -> Result<ApiSnapshot, ProducerError> {
        load_snapshot_file(&crate_dir.join(SNAPSHOT_FILE_NAME)).map_err(|source| ProducerError::Snapshot {
            crate_dir: crate_dir.display().to_string(),
            source,
        })
    }

    fn snapshot_path(&self, crate_dir: &Path, _features: &BTreeSet<String>) -> Option<PathBuf> {
        Some(crate_dir.join(SNAPSHOT_FILE_NAME))
    }
}

/// Runs an external command that writes a snapshot. The template is split on
/// whitespace; `{CRATE_DIR}`, `{FEATURES}` (comma separated) and `{OUT}` are
/// substituted in each word.
#[derive(Debug, Clone)]
pub struct CommandSnapshotProducer {
    template: String,
    out_dir: PathBuf,
}

impl CommandSnapshotProducer {
    pub fn new(template: impl Into<String>, out_dir: impl Into<PathBuf>) -> CommandSnapshotProducer {
        CommandSnapshotProducer {
            template: template.into(),
            out_dir: out_dir.into(),
        }
    }

    fn out_path(&self, crate_dir: &Path, features: &BTreeSet<String>) -> PathBuf {
        let stem = crate_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "crate".into());
        let tag = features.iter().cloned().collect::<Vec<_>>().join("+");
        self.out_dir.join(format!("{stem}.{tag}.json"))
    }
}

impl SnapshotProducer for CommandSnapshotProducer {
    fn produce(&self, crate_dir: &Path, features: &BTreeSet<String>) -> Result<ApiSnapshot, ProducerError> {
        let out = self.out_path(crate_dir, features);
        let feature_list = features.iter().cloned().collect::<Vec<_>>().join(",");
        let fail = |message: String| ProducerError::Command {
            crate_dir: crate_dir.display().to_string(),
            message,
        };
        let words: Vec<String> = self
            .template
            .split_whitespace()
            .map(|w| {
                w.replace("{CRATE_DIR}", &crate_dir.display().to_string())
                    .replace("{FEATURES}", &feature_list)
                    .replace("{OUT}", &out.display().to_string())
            })
            .collect();
        let (program, args) = words
            .split_first()
            .ok_or_else(|| fail("empty command template".into()))?;
        std::fs::create_dir_all(&self.out_dir).map_err(|e| fail(e.to_string()))?;
        let output = Command::new(program)
            .args(args)
            .output()
            .map_err(|e| fail(e.to_string()))?;
        if !output.status.success() {
            return Err(fail(String::from_utf8_lossy(&output.stderr).trim().to_string()));
        }
        load_snapshot_file(&out).map_err(|source| ProducerError::Snapshot {
            crate_dir: crate_dir.display().to_string(),
            source,
        })
    }

    fn snapshot_path(&self, crate_dir: &Path, features: &BTreeSet<String>) -> Option<PathBuf> {
        Some(self.out_path(crate_dir, features))
    }
}

type CacheKey = (PathBuf, Vec<String>);

/// Memoizes another producer. The feature set is part of the key, so asking
/// for different features always reaches the inner producer.
pub struct CachingProducer<P> {
    inner: P,
    cache: Mutex<HashMap<CacheKey, Arc<ApiSnapshot>>>,
}

impl<P: SnapshotProducer> CachingProducer<P> {
    pub fn new(inner: P) -> CachingProducer<P> {
        CachingProducer {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn produce_shared(
        &self,
        crate_dir: &Path,
        features: &BTreeSet<String>,
    ) -> Result<Arc<ApiSnapshot>, ProducerError> {
        let key = (crate_dir.to_path_buf(), features.iter().cloned().collect());
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let snapshot = Arc::new(self.inner.produce(crate_dir, features)?);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key, Arc::clone(&snapshot));
        Ok(snapshot)
    }

    pub fn len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<P: SnapshotProducer> SnapshotProducer for CachingProducer<P> {
    fn produce(&self, crate_dir: &Path, features: &BTreeSet<String>) -> Result<ApiSnapshot, ProducerError> {
        self.produce_shared(crate_dir, features).map(|s| (*s).clone())
    }

    fn snapshot_path(&self, crate_dir: &Path, features: &BTreeSet<String>) -> Option<PathBuf> {
        self.inner.snapshot_path(crate_dir, features)
    }
}
