use std::process::Command;

use super::{CompileResult, CompilerOracle, WitnessError};

/// Builds witnesses with an external command, typically
/// `cargo check --manifest-path {MANIFEST_DIR}/Cargo.toml`. The template is
/// split on whitespace; `{MANIFEST_DIR}` is the directory holding the
/// witness manifest. Exit status 0 means the witness builds.
pub struct CommandOracle {
    template: String,
}

impl CommandOracle {
    pub fn new(template: impl Into<String>) -> CommandOracle {
        CommandOracle {
            template: template.into(),
        }
    }
}

impl CompilerOracle for CommandOracle {
    fn compile(&self, manifest: &str, lib_source: &str) -> Result<CompileResult, WitnessError> {
        let io = |e: std::io::Error| WitnessError::Io(e.to_string());
        let dir = tempfile::tempdir().map_err(io)?;
        let manifest_dir = dir.path().join("build");
        std::fs::create_dir_all(&manifest_dir).map_err(io)?;
        std::fs::create_dir_all(dir.path().join("src")).map_err(io)?;
        std::fs::write(manifest_dir.join("Cargo.toml"), manifest).map_err(io)?;
        std::fs::write(dir.path().join("src/lib.rs"), lib_source).map_err(io)?;

        let words: Vec<String> = self
            .template
            .split_whitespace()
            .map(|w| w.replace("{MANIFEST_DIR}", &manifest_dir.display().to_string()))
            .collect();
        let (program, args) = words
            .split_first()
            .ok_or_else(|| WitnessError::OracleUnavailable("empty compiler command".into()))?;
        let output = Command::new(program)
            .args(args)
            .output()
            .map_err(|e| WitnessError::OracleUnavailable(format!("{program}: {e}")))?;
        Ok(if output.status.success() {
            CompileResult::Success
        } else {
            CompileResult::Failure(String::from_utf8_lossy(&output.stderr).into_owned())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_status_decides() {
        let ok = CommandOracle::new("test -f {MANIFEST_DIR}/Cargo.toml");
        assert_eq!(ok.compile("", "").unwrap(), CompileResult::Success);
        let bad = CommandOracle::new("test -f {MANIFEST_DIR}/missing");
        assert!(matches!(bad.compile("", "").unwrap(), CompileResult::Failure(_)));
        let absent = CommandOracle::new("definitely-not-a-program-xyz");
        assert!(matches!(
            absent.compile("", ""),
            Err(WitnessError::OracleUnavailable(_))
        ));
    }
}
