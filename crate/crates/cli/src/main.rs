//! `cargo-breakcheck`: checks a crate release for semver breakage, runs
//! crater-style batch jobs and builds witnesses for reported findings.

mod style;
mod workspace;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use breakcheck::checker::{run_check, BaselineSource, CheckConfig, Verdict};
use breakcheck::crater::{run_configured, CraterConfig, CraterOutputs, RecordStatus};
use breakcheck::features::{FeatureConfig, FeatureMode};
use breakcheck::lints::{embedded_lint_files, load_catalog, CatalogSource, LintDefinition};
use breakcheck::producer::{CachingProducer, CommandSnapshotProducer, FileSnapshotProducer, SnapshotProducer};
use breakcheck::registry::LocalIndex;
use breakcheck::report::{render_json, render_report, JsonReport};
use breakcheck::snapshot::load_snapshot_file;
use breakcheck::version::VersionBump;
use breakcheck::witness::{
    classify_witness, generate_witness_with, outcome_line, write_witness, CommandOracle, CompilerOracle, StubOracle,
    WitnessError,
};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use semver::Version;

/// Index used when no baseline flag is given, and by `--baseline-version`.
const REGISTRY_ENV: &str = "BREAKCHECK_REGISTRY";

#[derive(Parser)]
#[command(
    name = "cargo-breakcheck",
    version,
    about = "Checks a crate release for semver breakage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the current crate against a baseline release.
    CheckRelease(CheckArgs),
    /// Run the checker over adjacent releases of many crates.
    Crater(CraterArgs),
    /// Build witness crates for the findings of a JSON report.
    Witness(WitnessArgs),
    /// List the lint catalog, or export it.
    Lints(LintsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ReleaseType {
    Major,
    Minor,
    Patch,
}

impl From<ReleaseType> for VersionBump {
    fn from(r: ReleaseType) -> VersionBump {
        match r {
            ReleaseType::Major => VersionBump::Major,
            ReleaseType::Minor => VersionBump::Minor,
            ReleaseType::Patch => VersionBump::Patch,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Args)]
#[command(group(
    ArgGroup::new("baseline")
        .args(["baseline_version", "baseline_root", "baseline_snapshot", "registry"])
        .multiple(false)
))]
struct CheckArgs {
    /// Manifest of the current crate or workspace.
    #[arg(long, value_name = "PATH", default_value = "Cargo.toml")]
    manifest_path: PathBuf,
    /// Compare against this release from the registry index.
    #[arg(long, value_name = "VERSION")]
    baseline_version: Option<String>,
    /// Compare against the crate (or workspace) in this directory.
    #[arg(long, value_name = "PATH")]
    baseline_root: Option<PathBuf>,
    /// Compare against this snapshot file.
    #[arg(long, value_name = "PATH")]
    baseline_snapshot: Option<PathBuf>,
    /// Pick the newest suitable release from this registry index.
    #[arg(long, value_name = "DIR")]
    registry: Option<PathBuf>,
    /// Package to check; may be repeated.
    #[arg(long = "package", short = 'p', value_name = "NAME")]
    packages: Vec<String>,
    /// Package to leave out of a workspace check; may be repeated.
    #[arg(long, value_name = "NAME", requires = "workspace")]
    exclude: Vec<String>,
    /// Check every workspace member.
    #[arg(long)]
    workspace: bool,
    /// Features to enable on both sides.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    features: Vec<String>,
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    baseline_features: Vec<String>,
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    current_features: Vec<String>,
    #[arg(long, conflicts_with = "default_features")]
    all_features: bool,
    /// Only `default` plus the listed features.
    #[arg(long)]
    default_features: bool,
    /// Treat the release as this kind of bump regardless of its version.
    #[arg(long, value_enum)]
    release_type: Option<ReleaseType>,
    #[arg(long)]
    allow_prerelease_baseline: bool,
    #[arg(long, short)]
    verbose: bool,
    #[arg(long, value_enum, default_value = "text")]
    output: OutputFormat,
    /// Use lint files from this directory instead of the built-in catalog.
    #[arg(long, value_name = "DIR")]
    lints_dir: Option<PathBuf>,
    /// Command that writes a snapshot; `{CRATE_DIR}`, `{FEATURES}` and `{OUT}`
    /// are substituted. Without it `snapshot.json` next to each manifest is read.
    #[arg(long, value_name = "TEMPLATE")]
    snapshot_command: Option<String>,
}

#[derive(Args)]
struct CraterArgs {
    #[arg(long, value_name = "DIR")]
    index: PathBuf,
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, value_name = "DIR")]
    lints_dir: Option<PathBuf>,
}

#[derive(Args)]
struct WitnessArgs {
    /// JSON report written by `check-release --output json`.
    #[arg(long, value_name = "FILE")]
    report: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Build command, e.g. `cargo check --manifest-path {MANIFEST_DIR}/Cargo.toml`.
    /// Without it witnesses are judged against the report's snapshots.
    #[arg(long, value_name = "CMD")]
    oracle: Option<String>,
}

#[derive(Args)]
struct LintsArgs {
    /// Write the built-in lint files into this directory.
    #[arg(long, value_name = "DIR")]
    export: Option<PathBuf>,
}

fn main() -> ExitCode {
    let mut argv: Vec<OsString> = std::env::args_os().collect();
    // Invoked as `cargo breakcheck ...`.
    if argv.get(1).is_some_and(|a| a == "breakcheck") {
        argv.remove(1);
    }
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
    let result = match cli.command {
        Command::CheckRelease(args) => check_release(&args),
        Command::Crater(args) => crater(&args),
        Command::Witness(args) => witness(&args),
        Command::Lints(args) => lints(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            style::error(&format!("{e:#}"));
            ExitCode::from(2)
        }
    }
}

fn catalog(dir: Option<&Path>) -> Result<Vec<LintDefinition>> {
    let source = match dir {
        Some(d) => CatalogSource::Directory(d),
        None => CatalogSource::Embedded,
    };
    load_catalog(source).context("cannot load the lint catalog")
}

fn parse_version(text: &str) -> Result<Version> {
    Version::parse(text)
        .or_else(|_| Version::parse(&format!("{text}.0")))
        .or_else(|_| Version::parse(&format!("{text}.0.0")))
        .with_context(|| format!("invalid --baseline-version `{text}`"))
}

fn registry_from_env() -> Option<PathBuf> {
    std::env::var_os(REGISTRY_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn feature_config(args: &CheckArgs, side: &[String]) -> FeatureConfig {
    let mode = if args.all_features {
        FeatureMode::All
    } else if args.default_features {
        FeatureMode::NonePlusDefaults
    } else {
        FeatureMode::HeuristicDefault
    };
    FeatureConfig::new(mode).with_features(args.features.iter().chain(side).cloned())
}

fn baseline_for(args: &CheckArgs, package: &workspace::Package, selected: usize) -> Result<BaselineSource> {
    if let Some(path) = &args.baseline_snapshot {
        if selected > 1 {
            bail!(
                "--baseline-snapshot names one snapshot but {selected} packages are selected; pick one with --package"
            );
        }
        return Ok(BaselineSource::Snapshot(path.clone()));
    }
    if let Some(root) = &args.baseline_root {
        return Ok(BaselineSource::Root(workspace::find_package(root, &package.name)?));
    }
    if let Some(index) = &args.registry {
        return Ok(BaselineSource::Registry { index: index.clone() });
    }
    if let Some(v) = &args.baseline_version {
        let Some(index) = registry_from_env() else {
            bail!("--baseline-version needs a registry index; set {REGISTRY_ENV} to its directory");
        };
        return Ok(BaselineSource::Version {
            index,
            version: parse_version(v)?,
        });
    }
    match registry_from_env() {
        Some(index) => Ok(BaselineSource::Registry { index }),
        None => bail!(
            "no baseline given: pass one of --baseline-version, --baseline-root, --baseline-snapshot or --registry, or set {REGISTRY_ENV}"
        ),
    }
}

fn check_release(args: &CheckArgs) -> Result<ExitCode> {
    let catalog = catalog(args.lints_dir.as_deref())?;
    let packages = workspace::select(&args.manifest_path, args.workspace, &args.packages, &args.exclude)?;
    let producer: Box<dyn SnapshotProducer> = match &args.snapshot_command {
        Some(template) => {
            let out = std::env::temp_dir().join("breakcheck-snapshots");
            Box::new(CachingProducer::new(CommandSnapshotProducer::new(
                template.clone(),
                out,
            )))
        }
        None => Box::new(FileSnapshotProducer),
    };

    let mut reports = Vec::new();
    for package in &packages {
        let mut config = CheckConfig::new(&package.manifest, baseline_for(args, package, packages.len())?);
        config.baseline_features = feature_config(args, &args.baseline_features);
        config.current_features = feature_config(args, &args.current_features);
        config.release_type_override = args.release_type.map(Into::into);
        config.allow_prerelease_baseline = args.allow_prerelease_baseline;
        let report = run_check(&config, &catalog, producer.as_ref())
            .with_context(|| format!("cannot check `{}`", package.name))?;
        style::status(
            "Checked",
            &format!(
                "{} v{} against v{} ({} lints)",
                report.crate_name,
                report.current_version,
                report.baseline_version,
                report.lint_runs.len()
            ),
        );
        reports.push(report);
    }

    match args.output {
        OutputFormat::Json => print!("{}", render_json(&reports, &catalog)),
        OutputFormat::Text => {
            for (i, report) in reports.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                print!("{}", render_report(report, &catalog, args.verbose));
            }
        }
    }
    let failed = reports.iter().any(|r| matches!(r.verdict, Verdict::Violations { .. }));
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn crater(args: &CraterArgs) -> Result<ExitCode> {
    let catalog = catalog(args.lints_dir.as_deref())?;
    let config = CraterConfig::load(&args.config)?;
    let index = LocalIndex::new(&args.index);
    let (records, stats) = run_configured(&config, &index, &catalog, &args.out)?;
    let count = |s: RecordStatus| records.iter().filter(|r| r.status == s).count();
    let outputs = CraterOutputs::new(&config, &args.out);
    println!(
        "{} records: {} reported, {} filtered as doc-hidden, {} pairs not loadable",
        records.len(),
        count(RecordStatus::Reported),
        count(RecordStatus::FilteredDocHidden),
        count(RecordStatus::CompileFailedPair)
    );
    println!("{} lints with reported violations", stats.len());
    println!("records: {}", outputs.records.display());
    println!("stats: {}", outputs.stats.display());
    Ok(ExitCode::SUCCESS)
}

fn witness(args: &WitnessArgs) -> Result<ExitCode> {
    let text =
        std::fs::read_to_string(&args.report).with_context(|| format!("cannot read {}", args.report.display()))?;
    let report = JsonReport::parse(&text)
        .map_err(anyhow::Error::msg)
        .context("invalid report")?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;

    let mut log = String::new();
    for package in &report.packages {
        let load = |side: &str, path: &Option<String>| {
            let path = path
                .as_deref()
                .with_context(|| format!("report for `{}` has no {side} snapshot path", package.crate_name))?;
            load_snapshot_file(Path::new(path)).with_context(|| format!("cannot load {side} snapshot {path}"))
        };
        let baseline = load("baseline", &package.baseline_snapshot)?;
        let current = load("current", &package.current_snapshot)?;
        let stub = StubOracle::new([baseline.clone(), current.clone()]);
        let command = args.oracle.as_ref().map(|t| CommandOracle::new(t.clone()));
        let oracle: &dyn CompilerOracle = match &command {
            Some(c) => c,
            None => &stub,
        };
        for (n, json) in package.findings.iter().enumerate() {
            let finding = json.to_finding();
            let outcome = match generate_witness_with(&finding, &baseline, &current, oracle) {
                Ok(w) => {
                    write_witness(&args.out, &w, n)?;
                    match classify_witness(&w, oracle) {
                        Ok(o) => o.as_str(),
                        Err(e) => {
                            style::warning(&format!("{}: {e}", finding.path_string()));
                            "oracle_error"
                        }
                    }
                }
                Err(WitnessError::UnsupportedLint(_) | WitnessError::Unsupported { .. }) => "unsupported",
                Err(e @ WitnessError::Io(_)) => return Err(e.into()),
                Err(e) => {
                    style::warning(&format!("{}: {e}", finding.path_string()));
                    "oracle_error"
                }
            };
            let outcome = outcome.to_string();
            let line = outcome_line(&finding, &outcome);
            println!("{line}");
            log.push_str(&line);
            log.push('\n');
        }
    }
    std::fs::write(args.out.join("outcomes.tsv"), log)?;
    let findings: Vec<_> = report.packages.iter().flat_map(|p| p.findings.iter()).collect();
    let mut echo = serde_json::to_string_pretty(&findings)?;
    echo.push('\n');
    std::fs::write(args.out.join("findings.json"), echo)?;
    Ok(ExitCode::SUCCESS)
}

fn lints(args: &LintsArgs) -> Result<ExitCode> {
    match &args.export {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            for (name, text) in embedded_lint_files() {
                std::fs::write(dir.join(name), text).with_context(|| format!("cannot write {name}"))?;
            }
            println!("wrote {} lint files to {}", embedded_lint_files().len(), dir.display());
        }
        None => {
            for lint in catalog(None)? {
                println!("{}\t{}\t{}", lint.id, lint.required_update, lint.human_readable_name);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
