//! Picking the packages of a check from a crate or workspace manifest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use breakcheck::manifest::CrateManifest;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Package {
    pub name: String,
    pub manifest: PathBuf,
}

fn manifest_file(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("Cargo.toml")
    } else {
        path.to_path_buf()
    }
}

fn load(path: &Path) -> Result<CrateManifest> {
    CrateManifest::load(path).with_context(|| format!("cannot load {}", path.display()))
}

/// Member directories, expanding a trailing `*` component.
fn member_dirs(root: &Path, members: &[String]) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for member in members {
        match member.strip_suffix('*') {
            Some(prefix) => {
                let (parent, stem) = match prefix.rsplit_once('/') {
                    Some((p, s)) => (root.join(p), s),
                    None => (root.to_path_buf(), prefix),
                };
                let entries =
                    std::fs::read_dir(&parent).with_context(|| format!("cannot list {}", parent.display()))?;
                let mut found: Vec<PathBuf> = entries
                    .filter_map(|e| e.ok())
                    .map(|e| e.path())
                    .filter(|p| p.join("Cargo.toml").is_file())
                    .filter(|p| {
                        p.file_name()
                            .and_then(|n| n.to_str())
                            .is_some_and(|n| n.starts_with(stem))
                    })
                    .collect();
                found.sort();
                dirs.extend(found);
            }
            None => dirs.push(root.join(member)),
        }
    }
    Ok(dirs)
}

/// Every package reachable from `manifest`: the root package, if any,
/// followed by the workspace members.
pub fn packages(manifest: &Path) -> Result<(CrateManifest, Vec<Package>)> {
    let path = manifest_file(manifest);
    let root = load(&path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    if root.has_package {
        out.push(Package {
            name: root.name.clone(),
            manifest: path.clone(),
        });
    }
    for member in member_dirs(dir, &root.workspace_members)? {
        let file = member.join("Cargo.toml");
        let m = load(&file)?;
        if m.has_package && !out.iter().any(|p| p.name == m.name) {
            out.push(Package {
                name: m.name,
                manifest: file,
            });
        }
    }
    Ok((root, out))
}

pub fn select(manifest: &Path, workspace: bool, names: &[String], exclude: &[String]) -> Result<Vec<Package>> {
    let (root, all) = packages(manifest)?;
    let mut chosen: Vec<Package> = if workspace || (names.is_empty() && !root.has_package) {
        all.clone()
    } else if names.is_empty() {
        all[..1].to_vec()
    } else {
        let mut picked = Vec::new();
        for name in names {
            match all.iter().find(|p| &p.name == name) {
                Some(p) => picked.push(p.clone()),
                None => bail!("package `{name}` is not in the workspace at {}", manifest.display()),
            }
        }
        picked
    };
    chosen.retain(|p| !exclude.contains(&p.name));
    if chosen.is_empty() {
        bail!("no packages selected");
    }
    Ok(chosen)
}

/// The manifest of package `name` under `root`, which may be the crate
/// itself or a workspace containing it.
pub fn find_package(root: &Path, name: &str) -> Result<PathBuf> {
    let (_, all) = packages(root)?;
    match all.into_iter().find(|p| p.name == name) {
        Some(p) => Ok(p.manifest),
        None => bail!("baseline root {} has no package `{name}`", root.display()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, rel: &str, text: &str) {
        let path = dir.join(rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, text).unwrap();
    }

    fn pkg(name: &str) -> String {
        format!("[package]\nname = \"{name}\"\nversion = \"0.1.0\"\n")
    }

    #[test]
    fn virtual_workspace_with_glob() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        write(d, "Cargo.toml", "[workspace]\nmembers = [\"crates/*\", \"tool\"]\n");
        write(d, "crates/b/Cargo.toml", &pkg("b"));
        write(d, "crates/a/Cargo.toml", &pkg("a"));
        write(d, "tool/Cargo.toml", &pkg("tool"));
        let names = |v: Vec<Package>| v.into_iter().map(|p| p.name).collect::<Vec<_>>();

        assert_eq!(names(select(d, false, &[], &[]).unwrap()), ["a", "b", "tool"]);
        assert_eq!(names(select(d, true, &[], &["b".into()]).unwrap()), ["a", "tool"]);
        assert_eq!(names(select(d, false, &["tool".into()], &[]).unwrap()), ["tool"]);
        assert!(select(d, false, &["zzz".into()], &[]).is_err());
        assert_eq!(find_package(d, "b").unwrap(), d.join("crates/b/Cargo.toml"));
    }

    #[test]
    fn root_package_is_the_default() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        write(
            d,
            "Cargo.toml",
            &format!("{}\n[workspace]\nmembers = [\"sub\"]\n", pkg("top")),
        );
        write(d, "sub/Cargo.toml", &pkg("sub"));
        let chosen = select(&d.join("Cargo.toml"), false, &[], &[]).unwrap();
        assert_eq!(chosen.len(), 1);
        assert_eq!(chosen[0].name, "top");
        assert_eq!(select(d, true, &[], &[]).unwrap().len(), 2);
    }
}
