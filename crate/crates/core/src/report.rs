//! Human-readable and JSON renderings of a [`CheckReport`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use breakcheck_query::OutputRow;
use serde::{Deserialize, Serialize};

use crate::checker::{CheckReport, Verdict};
use crate::lints::{render_finding, Finding, LintDefinition, RequiredUpdate};
use crate::snapshot::Span;
use crate::version::VersionBump;

pub const REPORT_VERSION: u32 = 1;

fn headline(report: &CheckReport) -> String {
    let bump = match report.actual_bump {
        Some(b) if b == report.effective_bump => format!("{b} change"),
        Some(b) => format!("{b} change, checked as {}", report.effective_bump),
        None => format!("checked as {}", report.effective_bump),
    };
    format!(
        "{} {} -> {} ({bump})",
        report.crate_name, report.baseline_version, report.current_version
    )
}

/// Renders `report` for a terminal. The output is a pure function of its
/// inputs.
pub fn render_report(report: &CheckReport, catalog: &[LintDefinition], verbose: bool) -> String {
    let mut out = String::new();
    let lints: BTreeMap<&str, &LintDefinition> = catalog.iter().map(|l| (l.id.as_str(), l)).collect();

    if verbose {
        let _ = writeln!(out, "{}", headline(report));
        for run in &report.lint_runs {
            let status = if run.findings == 0 { "PASS" } else { "FAIL" };
            let update = lints
                .get(run.lint_id.as_str())
                .map(|l| l.required_update.as_str())
                .unwrap_or("?");
            let _ = writeln!(out, "{status} [{update:>5}] {}", run.lint_id);
        }
        out.push('\n');
    }

    if report.findings.is_empty() {
        let _ = writeln!(
            out,
            "{}: no semver violations ({} lints checked)",
            headline(report),
            report.lint_runs.len()
        );
        return out;
    }

    let mut by_lint: BTreeMap<&str, Vec<&Finding>> = BTreeMap::new();
    for f in &report.findings {
        by_lint.entry(f.lint_id.as_str()).or_default().push(f);
    }
    for (id, findings) in &by_lint {
        let Some(lint) = lints.get(id) else { continue };
        // Findings the release's own bump already allows are listed, not failed.
        let label = if VersionBump::from(lint.required_update) > report.effective_bump {
            "failure"
        } else {
            "allowed"
        };
        let _ = writeln!(out, "--- {label} {id}: {} ---", lint.human_readable_name);
        let _ = writeln!(out);
        let _ = writeln!(out, "Description:");
        let _ = writeln!(out, "{}", lint.error_message);
        let _ = writeln!(out, "        ref: {}", lint.reference_link.as_deref().unwrap_or("-"));
        let _ = writeln!(out, "  required update: {}", lint.required_update);
        let _ = writeln!(out);
        let _ = writeln!(out, "{}:", if label == "failure" { "Failed in" } else { "Found in" });
        for f in findings {
            let _ = writeln!(out, "  {}", render_finding(lint, &f.outputs));
        }
        let _ = writeln!(out);
    }
    let summary = match report.verdict {
        Verdict::Ok => format!("within the {} bump", report.effective_bump),
        Verdict::Violations { required } => {
            format!("semver requires a {required} bump, found {}", report.effective_bump)
        }
    };
    let _ = writeln!(
        out,
        "{}: {} findings from {} lints; {summary}",
        headline(report),
        report.findings.len(),
        by_lint.len()
    );
    out
}

/// One finding in a JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonFinding {
    pub lint_id: String,
    pub required_update: RequiredUpdate,
    pub item_path: Vec<String>,
    pub span: Option<Span>,
    pub message: String,
    pub outputs: OutputRow,
}

impl JsonFinding {
    pub fn to_finding(&self) -> Finding {
        Finding {
            lint_id: self.lint_id.clone(),
            required_update: self.required_update,
            item_path: self.item_path.clone(),
            span: self.span.clone(),
            outputs: self.outputs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonPackage {
    pub crate_name: String,
    pub baseline_version: String,
    pub current_version: String,
    pub actual_bump: Option<VersionBump>,
    pub effective_bump: VersionBump,
    pub verdict: Verdict,
    pub baseline_snapshot: Option<String>,
    pub current_snapshot: Option<String>,
    pub baseline_features: Vec<String>,
    pub current_features: Vec<String>,
    pub findings: Vec<JsonFinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonReport {
    pub report_version: u32,
    pub packages: Vec<JsonPackage>,
}

impl JsonReport {
    pub fn parse(text: &str) -> Result<JsonReport, String> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match value.get("report_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(REPORT_VERSION) => {}
            Some(v) => return Err(format!("unsupported report_version {v} (supported: {REPORT_VERSION})")),
            None => return Err("missing report_version".into()),
        }
        serde_json::from_value(value).map_err(|e| e.to_string())
    }
}

pub fn json_package(report: &CheckReport, catalog: &[LintDefinition]) -> JsonPackage {
    let lints: BTreeMap<&str, &LintDefinition> = catalog.iter().map(|l| (l.id.as_str(), l)).collect();
    JsonPackage {
        crate_name: report.crate_name.clone(),
        baseline_version: report.baseline_version.to_string(),
        current_version: report.current_version.to_string(),
        actual_bump: report.actual_bump,
        effective_bump: report.effective_bump,
        verdict: report.verdict,
        baseline_snapshot: report.baseline_snapshot.as_ref().map(|p| p.display().to_string()),
        current_snapshot: report.current_snapshot.as_ref().map(|p| p.display().to_string()),
        baseline_features: report.baseline_features.iter().cloned().collect(),
        current_features: report.current_features.iter().cloned().collect(),
        findings: report
            .findings
            .iter()
            .map(|f| JsonFinding {
                lint_id: f.lint_id.clone(),
                required_update: f.required_update,
                item_path: f.item_path.clone(),
                span: f.span.clone(),
                message: lints
                    .get(f.lint_id.as_str())
                    .map(|l| render_finding(l, &f.outputs))
                    .unwrap_or_default(),
                outputs: f.outputs.clone(),
            })
            .collect(),
    }
}

pub fn render_json(reports: &[CheckReport], catalog: &[LintDefinition]) -> String {
    let doc = JsonReport {
        report_version: REPORT_VERSION,
        packages: reports.iter().map(|r| json_package(r, catalog)).collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}
