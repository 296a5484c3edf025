//! Witnesses: a tiny library crate that uses the item a finding is about,
//! built once against the baseline release and once against the current
//! one. If only the current build fails, the finding is confirmed.

mod command;
mod stub;

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use breakcheck_query::{run_query, Arguments, Value};
use semver::Version;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapter::{schema, SnapshotPairAdapter};
use crate::lints::Finding;
use crate::snapshot::{ApiItem, ApiSnapshot, KindData, StructKind};

pub use command::CommandOracle;
pub use stub::StubOracle;

/// Largest number of generic arguments tried for a generic item.
pub const MAX_ARITY: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("no witness template for lint `{0}`")]
    UnsupportedLint(String),
    #[error("cannot build a witness for `{lint_id}` on {path}: {reason}")]
    Unsupported {
        lint_id: String,
        path: String,
        reason: String,
    },
    #[error("compiler oracle unavailable: {0}")]
    OracleUnavailable(String),
    #[error("cannot write witness: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileResult {
    Success,
    Failure(String),
}

/// Something that can tell whether a witness crate builds.
pub trait CompilerOracle: Sync {
    fn compile(&self, manifest: &str, lib_source: &str) -> Result<CompileResult, WitnessError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessOutcome {
    /// Builds against the baseline, fails against the current release.
    Confirmed,
    /// Builds against both.
    SuspectedFalsePositive,
    /// Does not even build against the baseline.
    Invalid,
}

impl WitnessOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            WitnessOutcome::Confirmed => "confirmed",
            WitnessOutcome::SuspectedFalsePositive => "suspected_false_positive",
            WitnessOutcome::Invalid => "invalid",
        }
    }
}

impl fmt::Display for WitnessOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub crate_name: String,
    pub baseline_version: Version,
    pub current_version: Version,
    pub lib_source: String,
    pub baseline_manifest: String,
    pub current_manifest: String,
    pub finding: Finding,
    /// Number of generic arguments the arity search settled on.
    pub arity: usize,
}

/// Lints that have a witness template.
pub const SUPPORTED_LINTS: [&str; 13] = [
    "auto_trait_impl_removed",
    "constructible_struct_adds_field",
    "derive_trait_impl_removed",
    "enum_marked_non_exhaustive",
    "enum_missing",
    "enum_variant_added",
    "enum_variant_missing",
    "function_missing",
    "function_parameter_count_changed",
    "inherent_method_missing",
    "method_parameter_count_changed",
    "struct_missing",
    "trait_missing",
];

/// Bounds usable on a helper function for traits that can be derived from
/// the standard library.
const DERIVE_BOUNDS: [(&str, &str); 9] = [
    ("Clone", "Clone"),
    ("Copy", "Copy"),
    ("Debug", "std::fmt::Debug"),
    ("Default", "Default"),
    ("Eq", "Eq"),
    ("Hash", "std::hash::Hash"),
    ("Ord", "Ord"),
    ("PartialEq", "PartialEq"),
    ("PartialOrd", "PartialOrd"),
];

pub fn manifest_text(crate_name: &str, version: &Version) -> String {
    format!(
        "[package]\nname = \"witness\"\nversion = \"0.0.0\"\nedition = \"2021\"\npublish = false\n\n[lib]\npath = \"../src/lib.rs\"\n\n[dependencies]\n{crate_name} = \"={version}\"\n"
    )
}

/// Rust identifier under which a crate is imported.
pub fn crate_ident(crate_name: &str) -> String {
    crate_name.replace('-', "_")
}

fn text_output<'f>(finding: &'f Finding, key: &str) -> Option<&'f str> {
    finding.outputs.get(key).and_then(Value::as_str)
}

/// Source path of the finding's item, with the crate segment renamed to
/// its identifier.
fn source_path(finding: &Finding) -> String {
    let mut segs = finding.item_path.clone();
    if let Some(first) = segs.first_mut() {
        *first = crate_ident(first);
    }
    segs.join("::")
}

fn generic_args(n: usize) -> String {
    if n == 0 {
        String::new()
    } else {
        format!("<{}>", vec!["()"; n].join(", "))
    }
}

fn turbofish(n: usize) -> String {
    if n == 0 {
        String::new()
    } else {
        format!("::{}", generic_args(n))
    }
}

fn placeholders(n: usize) -> String {
    vec!["todo!()"; n].join(", ")
}

fn header(finding: &Finding) -> String {
    format!(
        "//! Witness for `{}` on `{}`.\n\n#![allow(unreachable_code, unused_variables)]\n\n",
        finding.lint_id,
        finding.path_string()
    )
}

/// Variant patterns of the baseline enum at `path`, one per variant, found
/// by querying the baseline snapshot.
fn variant_patterns(baseline: &ApiSnapshot, path: &[String], src_path: &str) -> Result<Vec<String>, String> {
    let adapter = SnapshotPairAdapter::single(baseline);
    let mut args = Arguments::new();
    args.insert("path".into(), Value::text_list(path.iter().map(String::as_str)));
    let mut out = Vec::new();
    for (ty, suffix) in [
        ("PlainVariant", ""),
        ("TupleVariant", "(..)"),
        ("StructVariant", " { .. }"),
    ] {
        let query = format!(
            r#"{{
    Crate {{
        item {{
            ... on Enum {{
                importable_path {{
                    path @filter(op: "=", value: ["$path"])
                }}
                variant {{
                    ... on {ty} {{
                        name @output
                    }}
                }}
            }}
        }}
    }}
}}"#
        );
        let rows = run_query(&query, schema(), &adapter, &args).map_err(|e| e.to_string())?;
        for row in rows {
            if let Some(name) = row.get("name").and_then(Value::as_str) {
                out.push(format!("{src_path}::{name}{suffix}"));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Field names of the baseline struct at `path` and its kind, found by
/// querying the baseline snapshot.
fn struct_fields(baseline: &ApiSnapshot, path: &[String]) -> Result<(String, Vec<String>), String> {
    let adapter = SnapshotPairAdapter::single(baseline);
    let mut args = Arguments::new();
    args.insert("path".into(), Value::text_list(path.iter().map(String::as_str)));
    let query = r#"{
    Crate {
        item {
            ... on Struct {
                struct_kind @output
                importable_path {
                    path @filter(op: "=", value: ["$path"])
                }
                field @fold {
                    name @output(name: "field_names")
                }
            }
        }
    }
}"#;
    let rows = run_query(query, schema(), &adapter, &args).map_err(|e| e.to_string())?;
    let row = rows.first().ok_or("struct not found in baseline")?;
    let kind = row
        .get("struct_kind")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let names = row
        .get("field_names")
        .and_then(Value::as_list)
        .map(|l| l.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
        .unwrap_or_default();
    Ok((kind, names))
}

fn find_inherent_method<'s>(snapshot: &'s ApiSnapshot, owner: &ApiItem, name: &str) -> Option<&'s ApiItem> {
    owner
        .impls()
        .iter()
        .filter_map(|i| snapshot.items.get(i))
        .filter(|i| i.implemented_trait().is_none())
        .flat_map(|i| i.methods().iter().filter_map(|m| snapshot.items.get(m)))
        .find(|m| m.name == name)
}

/// Source of a witness for `finding` with `arity` generic arguments on the
/// generic item involved.
fn render_source(finding: &Finding, baseline: &ApiSnapshot, arity: usize) -> Result<String, WitnessError> {
    let unsupported = |reason: &str| WitnessError::Unsupported {
        lint_id: finding.lint_id.clone(),
        path: finding.path_string(),
        reason: reason.to_string(),
    };
    let path = source_path(finding);
    let item = baseline
        .item_at_path(&finding.item_path)
        .ok_or_else(|| unsupported("item not found in baseline"))?;
    if item.type_params().iter().any(|p| !p.bounds.is_empty()) {
        return Err(unsupported("generic parameters with trait bounds"));
    }
    let ty = format!("{path}{}", generic_args(arity));
    let mut src = header(finding);
    match finding.lint_id.as_str() {
        "struct_missing" | "enum_missing" => {
            let _ = write!(src, "pub fn witness(value: {ty}) {{\n    let _ = value;\n}}\n");
        }
        "trait_missing" => {
            let _ = write!(src, "pub fn witness<T: {ty}>(value: T) {{\n    let _ = value;\n}}\n");
        }
        "function_missing" | "function_parameter_count_changed" => {
            let n = item.parameters().len();
            let _ = write!(
                src,
                "pub fn witness() {{\n    {path}{}({});\n}}\n",
                turbofish(arity),
                placeholders(n)
            );
        }
        "inherent_method_missing" | "method_parameter_count_changed" => {
            let name = text_output(finding, "method_name").ok_or_else(|| unsupported("no method name"))?;
            let method = find_inherent_method(baseline, item, name)
                .ok_or_else(|| unsupported("method not found in baseline"))?;
            if !method.type_params().is_empty() {
                return Err(unsupported("generic method"));
            }
            let n = method.parameters().len();
            let _ = write!(
                src,
                "pub fn witness() {{\n    {path}{}::{name}({});\n}}\n",
                turbofish(arity),
                placeholders(n)
            );
        }
        "auto_trait_impl_removed" | "derive_trait_impl_removed" => {
            let trait_name = text_output(finding, "trait_name").ok_or_else(|| unsupported("no trait name"))?;
            let bound = if finding.lint_id == "auto_trait_impl_removed" {
                match trait_name {
                    "UnwindSafe" | "RefUnwindSafe" => format!("std::panic::{trait_name}"),
                    other => other.to_string(),
                }
            } else {
                DERIVE_BOUNDS
                    .iter()
                    .find(|(t, _)| *t == trait_name)
                    .map(|(_, b)| b.to_string())
                    .ok_or_else(|| unsupported("derived trait outside the standard library"))?
            };
            let helper = format!("require_{}", trait_name.to_ascii_lowercase());
            let _ = write!(
                src,
                "pub fn witness(value: {ty}) {{\n    {helper}(value);\n}}\n\nfn {helper}<T: {bound}>(value: T) {{\n    let _ = value;\n}}\n"
            );
        }
        "enum_variant_missing" => {
            let name = text_output(finding, "variant_name").ok_or_else(|| unsupported("no variant name"))?;
            let variant = variant_patterns(baseline, &finding.item_path, &path)
                .map_err(|e| unsupported(&e))?
                .into_iter()
                .find(|p| {
                    let rest = &p[path.len() + 2..];
                    rest == name || rest.starts_with(&format!("{name}(")) || rest.starts_with(&format!("{name} "))
                })
                .ok_or_else(|| unsupported("variant not found in baseline"))?;
            let _ = write!(
                src,
                "pub fn witness(value: {ty}) -> bool {{\n    if let {variant} = value {{\n        return true;\n    }}\n    false\n}}\n"
            );
        }
        "enum_variant_added" | "enum_marked_non_exhaustive" => {
            let arms = variant_patterns(baseline, &finding.item_path, &path).map_err(|e| unsupported(&e))?;
            let _ = writeln!(src, "pub fn witness(value: {ty}) {{\n    match value {{");
            for arm in arms {
                let _ = writeln!(src, "        {arm} => {{}}");
            }
            src.push_str("    }\n}\n");
        }
        "constructible_struct_adds_field" => {
            let (kind, fields) = struct_fields(baseline, &finding.item_path).map_err(|e| unsupported(&e))?;
            let pattern = match kind.as_str() {
                k if k == StructKind::Tuple.as_str() => format!("{path}({})", vec!["_"; fields.len()].join(", ")),
                k if k == StructKind::Plain.as_str() => format!(
                    "{path} {{ {} }}",
                    fields.iter().map(|f| format!("{f}: _")).collect::<Vec<_>>().join(", ")
                ),
                _ => return Err(unsupported("unit struct")),
            };
            let _ = write!(src, "pub fn witness(value: {ty}) {{\n    let {pattern} = value;\n}}\n");
        }
        other => return Err(WitnessError::UnsupportedLint(other.to_string())),
    }
    Ok(src)
}

/// `use` fallback for an item no usage template could be found for.
fn import_source(finding: &Finding) -> String {
    format!(
        "{}#[allow(unused_imports)]\nuse {};\n",
        header(finding),
        source_path(finding)
    )
}

/// Builds a witness, checking candidate forms against the baseline with
/// the default stub oracle.
pub fn generate_witness(
    finding: &Finding,
    baseline: &ApiSnapshot,
    current: &ApiSnapshot,
) -> Result<Witness, WitnessError> {
    let oracle = StubOracle::new([baseline.clone(), current.clone()]);
    generate_witness_with(finding, baseline, current, &oracle)
}

/// Builds a witness. For generic items the number of generic arguments is
/// searched from 0 up to [`MAX_ARITY`]; the first form that builds against
/// the baseline wins. If none does, a plain `use` of the item is emitted.
pub fn generate_witness_with(
    finding: &Finding,
    baseline: &ApiSnapshot,
    current: &ApiSnapshot,
    oracle: &dyn CompilerOracle,
) -> Result<Witness, WitnessError> {
    if finding.lint_id == "struct_repr_c_removed" || !SUPPORTED_LINTS.contains(&finding.lint_id.as_str()) {
        return Err(WitnessError::UnsupportedLint(finding.lint_id.clone()));
    }
    let crate_name = baseline.crate_name.clone();
    let baseline_manifest = manifest_text(&crate_name, &baseline.crate_version);
    let current_manifest = manifest_text(&crate_name, &current.crate_version);
    let build = |lib_source: String, arity: usize| Witness {
        crate_name: crate_name.clone(),
        baseline_version: baseline.crate_version.clone(),
        current_version: current.crate_version.clone(),
        lib_source,
        baseline_manifest: baseline_manifest.clone(),
        current_manifest: current_manifest.clone(),
        finding: finding.clone(),
        arity,
    };

    for arity in 0..=MAX_ARITY {
        let source = render_source(finding, baseline, arity)?;
        if oracle.compile(&baseline_manifest, &source)? == CompileResult::Success {
            return Ok(build(source, arity));
        }
    }
    let fallback = import_source(finding);
    if oracle.compile(&baseline_manifest, &fallback)? == CompileResult::Success {
        return Ok(build(fallback, 0));
    }
    Err(WitnessError::Unsupported {
        lint_id: finding.lint_id.clone(),
        path: finding.path_string(),
        reason: format!("no form with up to {MAX_ARITY} generic arguments builds against the baseline"),
    })
}

/// Compiles the baseline side first; the current side is only tried when
/// the baseline builds.
pub fn classify_witness(witness: &Witness, oracle: &dyn CompilerOracle) -> Result<WitnessOutcome, WitnessError> {
    if oracle.compile(&witness.baseline_manifest, &witness.lib_source)? != CompileResult::Success {
        return Ok(WitnessOutcome::Invalid);
    }
    Ok(match oracle.compile(&witness.current_manifest, &witness.lib_source)? {
        CompileResult::Success => WitnessOutcome::SuspectedFalsePositive,
        CompileResult::Failure(_) => WitnessOutcome::Confirmed,
    })
}

/// Directory of witness number `n` under `root`.
pub fn witness_dir(root: &Path, witness: &Witness, n: usize) -> PathBuf {
    root.join(&witness.crate_name)
        .join(format!("{}_{}", witness.baseline_version, witness.current_version))
        .join(&witness.finding.lint_id)
        .join(n.to_string())
}

/// Writes `baseline/Cargo.toml`, `current/Cargo.toml` and `src/lib.rs`.
pub fn write_witness(root: &Path, witness: &Witness, n: usize) -> Result<PathBuf, WitnessError> {
    let dir = witness_dir(root, witness, n);
    let io = |e: std::io::Error| WitnessError::Io(format!("{}: {e}", dir.display()));
    for (sub, manifest) in [
        ("baseline", &witness.baseline_manifest),
        ("current", &witness.current_manifest),
    ] {
        std::fs::create_dir_all(dir.join(sub)).map_err(io)?;
        std::fs::write(dir.join(sub).join("Cargo.toml"), manifest).map_err(io)?;
    }
    std::fs::create_dir_all(dir.join("src")).map_err(io)?;
    std::fs::write(dir.join("src/lib.rs"), &witness.lib_source).map_err(io)?;
    Ok(dir)
}

/// One outcome-log line: `<lint_id>\t<path>\t<outcome>`.
pub fn outcome_line(finding: &Finding, outcome: &str) -> String {
    format!("{}\t{}\t{outcome}", finding.lint_id, finding.path_string())
}

/// Whether the item kind at `path` has generic parameters; used by tests.
#[doc(hidden)]
pub fn generic_param_count(snapshot: &ApiSnapshot, path: &[String]) -> usize {
    snapshot.item_at_path(path).map_or(0, |i| match &i.data {
        KindData::Struct { type_params, .. }
        | KindData::Enum { type_params, .. }
        | KindData::Function { type_params, .. }
        | KindData::Trait { type_params, .. } => type_params.len(),
        _ => 0,
    })
}
