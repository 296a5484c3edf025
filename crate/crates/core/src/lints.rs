//! The lint catalog: declarative lint definitions, their loading and
//! validation, and rendering of individual findings.
//!
//! Each lint lives in one `.ron` file under `lints/`; the file format is
//! described in `docs/lint-format.md`. The files are embedded into the
//! library at build time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use breakcheck_query::{check_query, parse_query, Arguments, CheckedQuery, OutputRow, Value, ValueKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapter::schema;
use crate::snapshot::Span;

include!(concat!(env!("OUT_DIR"), "/embedded_lints.rs"));

/// Embedded lint files as `(file name, contents)`, sorted by file name.
pub fn embedded_lint_files() -> &'static [(&'static str, &'static str)] {
    EMBEDDED_LINTS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequiredUpdate {
    Minor,
    Major,
}

impl RequiredUpdate {
    pub fn as_str(self) -> &'static str {
        match self {
            RequiredUpdate::Minor => "minor",
            RequiredUpdate::Major => "major",
        }
    }
}

impl fmt::Display for RequiredUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("cannot read lint source {path}: {message}")]
    Io { path: String, message: String },
    #[error("lint file {file}: {message}")]
    MalformedLint { file: String, message: String },
    #[error("lint file {file} declares id `{id}`; the id must equal the file stem")]
    IdMismatch { file: String, id: String },
    #[error("duplicate lint id `{0}`")]
    DuplicateLintId(String),
    #[error("lint `{id}`: query validation failed: {cause}")]
    QueryValidationFailed { id: String, cause: String },
    #[error("lint `{id}`: template placeholder `{{{{{name}}}}}` is not a query output")]
    TemplateUnboundPlaceholder { id: String, name: String },
}

/// On-disk shape of one lint file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SemverQuery {
    id: String,
    human_readable_name: String,
    description: String,
    required_update: RonRequiredUpdate,
    reference_link: Option<String>,
    query: String,
    #[serde(default)]
    arguments: BTreeMap<String, Value>,
    error_message: String,
    per_result_error_template: String,
}

#[derive(Debug, Deserialize)]
enum RonRequiredUpdate {
    Major,
    Minor,
}

#[derive(Debug, Clone)]
pub struct LintDefinition {
    pub id: String,
    pub human_readable_name: String,
    pub description: String,
    pub required_update: RequiredUpdate,
    pub reference_link: Option<String>,
    pub query: String,
    pub arguments: Arguments,
    pub error_message: String,
    pub per_result_error_template: String,
    pub checked: CheckedQuery,
}

/// A lint result row after post-processing by the checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub lint_id: String,
    pub required_update: RequiredUpdate,
    pub item_path: Vec<String>,
    pub span: Option<Span>,
    pub outputs: OutputRow,
}

impl Finding {
    pub fn from_row(lint: &LintDefinition, outputs: OutputRow) -> Finding {
        let item_path = outputs
            .get("path")
            .and_then(Value::as_list)
            .map(|l| l.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
            .unwrap_or_default();
        let span = match (
            outputs.get("span_filename").and_then(Value::as_str),
            outputs.get("span_begin_line").and_then(Value::as_int),
        ) {
            (Some(filename), Some(line)) => Some(Span {
                filename: filename.to_string(),
                begin_line: u32::try_from(line).unwrap_or(0),
            }),
            _ => None,
        };
        Finding {
            lint_id: lint.id.clone(),
            required_update: lint.required_update,
            item_path,
            span,
            outputs,
        }
    }

    pub fn path_string(&self) -> String {
        self.item_path.join("::")
    }
}

pub enum CatalogSource<'p> {
    Embedded,
    Directory(&'p Path),
}

/// Loads and validates every lint, sorted by id.
pub fn load_catalog(source: CatalogSource<'_>) -> Result<Vec<LintDefinition>, CatalogError> {
    let files: Vec<(String, String)> = match source {
        CatalogSource::Embedded => EMBEDDED_LINTS
            .iter()
            .map(|(n, c)| (n.to_string(), c.to_string()))
            .collect(),
        CatalogSource::Directory(dir) => read_lint_dir(dir)?,
    };
    let mut seen = BTreeSet::new();
    let mut lints = Vec::new();
    for (file, text) in &files {
        let lint = parse_lint(file, text)?;
        if !seen.insert(lint.id.clone()) {
            return Err(CatalogError::DuplicateLintId(lint.id));
        }
        lints.push((file, lint));
    }
    // Checked after duplicates so that a copied file reports the clash.
    for (file, lint) in &lints {
        if file.strip_suffix(".ron") != Some(lint.id.as_str()) {
            return Err(CatalogError::IdMismatch {
                file: file.to_string(),
                id: lint.id.clone(),
            });
        }
    }
    let mut lints: Vec<LintDefinition> = lints.into_iter().map(|(_, l)| l).collect();
    lints.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(lints)
}

fn read_lint_dir(dir: &Path) -> Result<Vec<(String, String)>, CatalogError> {
    let io = |e: std::io::Error| CatalogError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == "ron") {
            let text = std::fs::read_to_string(&path).map_err(io)?;
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            out.push((name, text));
        }
    }
    out.sort();
    Ok(out)
}

/// Parses and validates one lint file. The id-versus-file-name rule is
/// checked by [`load_catalog`].
pub fn parse_lint(file_name: &str, text: &str) -> Result<LintDefinition, CatalogError> {
    let raw: SemverQuery = ron::from_str(text).map_err(|e| CatalogError::MalformedLint {
        file: file_name.to_string(),
        message: e.to_string(),
    })?;
    let id = raw.id.clone();
    let fail = |cause: String| CatalogError::QueryValidationFailed { id: id.clone(), cause };

    let document = parse_query(&raw.query).map_err(|e| fail(e.to_string()))?;
    let checked = check_query(&document, schema()).map_err(|e| fail(e.to_string()))?;
    for (name, kind) in checked.parameters() {
        match raw.arguments.get(name) {
            None => return Err(fail(format!("argument `{name}` is not provided"))),
            Some(v) if !v.kind().is_some_and(|k| k.compatible_with(kind)) => {
                return Err(fail(format!("argument `{name}` = {v} does not fit kind {kind}")))
            }
            Some(_) => {}
        }
    }
    match checked.outputs().get("path") {
        Some(ValueKind::List(_)) => {}
        _ => return Err(fail("query must output the item's `path`".into())),
    }
    for name in placeholders(&raw.per_result_error_template) {
        if !checked.outputs().contains_key(&name) {
            return Err(CatalogError::TemplateUnboundPlaceholder { id, name });
        }
    }

    Ok(LintDefinition {
        id: raw.id,
        human_readable_name: raw.human_readable_name,
        description: raw.description,
        required_update: match raw.required_update {
            RonRequiredUpdate::Major => RequiredUpdate::Major,
            RonRequiredUpdate::Minor => RequiredUpdate::Minor,
        },
        reference_link: raw.reference_link,
        query: raw.query,
        arguments: raw.arguments,
        error_message: raw.error_message,
        per_result_error_template: raw.per_result_error_template,
        checked,
    })
}

/// Placeholder names in `{{name}}` form, in order of appearance.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else { break };
        out.push(after[..end].trim().to_string());
        rest = &after[end + 2..];
    }
    out
}

fn render_value(value: &Value) -> String {
    match value {
        Value::List(items) => items.iter().map(render_value).collect::<Vec<_>>().join("::"),
        other => other.to_string(),
    }
}

/// Substitutes the row into the lint's per-result template and appends
/// ` in <filename>:<line>` when the row carries a span.
pub fn render_finding(lint: &LintDefinition, row: &OutputRow) -> String {
    let mut out = String::new();
    let mut rest = lint.per_result_error_template.as_str();
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else {
            out.push_str(&rest[start..]);
            rest = "";
            break;
        };
        let name = after[..end].trim();
        out.push_str(&row.get(name).map(render_value).unwrap_or_default());
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    if let (Some(Value::Text(file)), Some(Value::Int(line))) = (row.get("span_filename"), row.get("span_begin_line")) {
        out.push_str(&format!(" in {file}:{line}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r##"SemverQuery(
    id: "enum_missing",
    human_readable_name: "enum removed",
    description: "d",
    required_update: Major,
    reference_link: None,
    query: r#"{ CrateDiff { baseline { item { ... on Enum { name @output importable_path { path @output } span_: span @optional { filename @output begin_line @output } } } } } }"#,
    arguments: {},
    error_message: "e",
    per_result_error_template: "enum {{path}}",
)"##;

    fn minimal() -> String {
        MINIMAL.to_string()
    }

    #[test]
    fn renders_path_and_location() {
        let lint = parse_lint("enum_missing.ron", &minimal()).unwrap();
        let mut row = OutputRow::new();
        row.insert("name".into(), Value::text("Color"));
        row.insert("path".into(), Value::text_list(["x", "Color"]));
        row.insert("span_filename".into(), Value::text("src/lib.rs"));
        row.insert("span_begin_line".into(), Value::Int(4));
        let text = render_finding(&lint, &row);
        assert_eq!(text, "enum x::Color in src/lib.rs:4");

        row.insert("span_filename".into(), Value::Null);
        row.insert("span_begin_line".into(), Value::Null);
        assert_eq!(render_finding(&lint, &row), "enum x::Color");
    }

    #[test]
    fn unbound_placeholder_is_rejected() {
        let text = minimal().replace("enum {{path}}", "enum {{nonexistent}}");
        let err = parse_lint("enum_missing.ron", &text).unwrap_err();
        assert_eq!(
            err,
            CatalogError::TemplateUnboundPlaceholder {
                id: "enum_missing".into(),
                name: "nonexistent".into()
            }
        );
    }

    #[test]
    fn duplicate_ids_across_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("enum_missing.ron"), minimal()).unwrap();
        std::fs::write(dir.path().join("enum_missing_again.ron"), minimal()).unwrap();
        let err = load_catalog(CatalogSource::Directory(dir.path())).unwrap_err();
        assert_eq!(err, CatalogError::DuplicateLintId("enum_missing".into()));
    }

    #[test]
    fn id_must_match_file_stem() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("other.ron"), minimal()).unwrap();
        let err = load_catalog(CatalogSource::Directory(dir.path())).unwrap_err();
        assert!(matches!(err, CatalogError::IdMismatch { .. }));
    }

    #[test]
    fn query_errors_name_the_lint() {
        let text = minimal().replace("... on Enum", "... on Nope");
        let err = parse_lint("enum_missing.ron", &text).unwrap_err();
        assert!(matches!(err, CatalogError::QueryValidationFailed { ref id, .. } if id == "enum_missing"));
    }

    #[test]
    fn embedded_catalog_validates() {
        let catalog = load_catalog(CatalogSource::Embedded).unwrap_or_else(|e| panic!("{e}"));
        assert_eq!(catalog.len(), 33);
        assert!(catalog.windows(2).all(|w| w[0].id < w[1].id));
    }
}
