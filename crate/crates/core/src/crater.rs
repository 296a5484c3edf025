//! Batch runs of the checker over adjacent release pairs of many crates,
//! with per-lint statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::check_snapshots;
use crate::lints::{Finding, LintDefinition};
use crate::registry::{LocalIndex, RegistryEntry, RegistryError};
use crate::snapshot::{load_snapshot_file, ApiSnapshot};
use crate::version::{compute_actual_bump, VersionBump};
use crate::witness::{classify_witness, generate_witness, StubOracle, WitnessError};

#[derive(Debug, Error)]
pub enum CraterError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("invalid crater config {path}: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("corrupt checkpoint {path}, line {line}: {message}")]
    Checkpoint { path: String, line: usize, message: String },
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CraterError + '_ {
    move |e| CraterError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Job configuration file. Relative paths are resolved against the
/// directory holding the file.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CraterConfig {
    /// Rank file; defaults to `crates.txt` in the index.
    #[serde(default)]
    pub crate_list: Option<PathBuf>,
    #[serde(default)]
    pub top_n: Option<usize>,
    pub published_after: NaiveDate,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub witnesses: bool,
    #[serde(default = "default_records")]
    pub records_file: PathBuf,
    #[serde(default = "default_stats")]
    pub stats_file: PathBuf,
    #[serde(default = "default_checkpoint")]
    pub checkpoint_file: PathBuf,
}

fn default_workers() -> usize {
    1
}
fn default_records() -> PathBuf {
    "records.csv".into()
}
fn default_stats() -> PathBuf {
    "stats.csv".into()
}
fn default_checkpoint() -> PathBuf {
    "checkpoint.jsonl".into()
}

impl CraterConfig {
    pub fn load(path: &Path) -> Result<CraterConfig, CraterError> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        let mut config: CraterConfig = toml::from_str(&text).map_err(|e| CraterError::Config {
            path: path.display().to_string(),
            message: e.message().to_string(),
        })?;
        if config.workers == 0 {
            return Err(CraterError::Config {
                path: path.display().to_string(),
                message: "workers must be at least 1".into(),
            });
        }
        let base = path.parent().unwrap_or(Path::new("."));
        config.crate_list = config.crate_list.map(|p| base.join(p));
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CraterJob {
    pub crates: Vec<String>,
    pub published_after: NaiveDate,
    pub workers: usize,
    pub witnesses: bool,
}

impl CraterJob {
    /// Crates come from the config's rank file, or the index's own
    /// `crates.txt`, truncated to `top_n`.
    pub fn from_config(config: &CraterConfig, index: &LocalIndex) -> Result<CraterJob, CraterError> {
        let mut crates = match &config.crate_list {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(io_error(path))?;
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(str::to_string)
                    .collect()
            }
            None => index.ranked_crates()?,
        };
        if let Some(n) = config.top_n {
            crates.truncate(n);
        }
        Ok(CraterJob {
            crates,
            published_after: config.published_after,
            workers: config.workers,
            witnesses: config.witnesses,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Reported,
    FilteredDocHidden,
    CompileFailedPair,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Reported => "reported",
            RecordStatus::FilteredDocHidden => "filtered_doc_hidden",
            RecordStatus::CompileFailedPair => "compile_failed_pair",
        }
    }

    fn parse(text: &str) -> Option<RecordStatus> {
        [
            RecordStatus::Reported,
            RecordStatus::FilteredDocHidden,
            RecordStatus::CompileFailedPair,
        ]
        .into_iter()
        .find(|s| s.as_str() == text)
    }
}

/// One line of the records CSV. A pair whose snapshots cannot be loaded
/// yields a single record with empty lint and item columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CraterRecord {
    pub crate_name: String,
    pub baseline: String,
    pub current: String,
    pub lint_id: String,
    pub item_path: String,
    pub filename: String,
    pub begin_line: Option<u32>,
    pub status: RecordStatus,
    pub witness_outcome: Option<String>,
}

impl CraterRecord {
    fn from_finding(pair: (&RegistryEntry, &RegistryEntry), finding: &Finding, status: RecordStatus) -> CraterRecord {
        CraterRecord {
            crate_name: pair.0.name.clone(),
            baseline: pair.0.version.to_string(),
            current: pair.1.version.to_string(),
            lint_id: finding.lint_id.clone(),
            item_path: finding.path_string(),
            filename: finding.span.as_ref().map(|s| s.filename.clone()).unwrap_or_default(),
            begin_line: finding.span.as_ref().map(|s| s.begin_line),
            status,
            witness_outcome: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsRow {
    pub lint_id: String,
    pub individual_items: usize,
    pub different_releases: usize,
    pub affected_crates: usize,
}

/// Adjacent pairs among the non-yanked releases, skipping major bumps and
/// pairs whose newer release predates `published_after`.
pub fn enumerate_pairs(
    releases: &[RegistryEntry],
    published_after: NaiveDate,
) -> Vec<(&RegistryEntry, &RegistryEntry)> {
    let live: Vec<&RegistryEntry> = releases.iter().filter(|r| !r.yanked).collect();
    live.windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|(_, c)| c.published_at >= published_after)
        .filter(|(b, c)| matches!(compute_actual_bump(&b.version, &c.version), Ok(bump) if bump != VersionBump::Major))
        .collect()
}

fn load_side(entry: &RegistryEntry) -> Option<ApiSnapshot> {
    load_snapshot_file(entry.snapshot.as_path()?).ok()
}

fn witness_outcome(finding: &Finding, baseline: &ApiSnapshot, current: &ApiSnapshot, oracle: &StubOracle) -> String {
    let result = generate_witness(finding, baseline, current).and_then(|w| classify_witness(&w, oracle));
    match result {
        Ok(outcome) => outcome.as_str().to_string(),
        Err(WitnessError::UnsupportedLint(_)) | Err(WitnessError::Unsupported { .. }) => "unsupported".into(),
        Err(_) => "oracle_error".into(),
    }
}

fn run_pair(pair: (&RegistryEntry, &RegistryEntry), catalog: &[LintDefinition], witnesses: bool) -> Vec<CraterRecord> {
    let snapshots = load_side(pair.0).zip(load_side(pair.1));
    let report = snapshots
        .as_ref()
        .and_then(|(b, c)| check_snapshots(b, c, catalog, None).ok().map(|r| (b, c, r)));
    let Some((baseline, current, report)) = report else {
        return vec![CraterRecord {
            crate_name: pair.0.name.clone(),
            baseline: pair.0.version.to_string(),
            current: pair.1.version.to_string(),
            lint_id: String::new(),
            item_path: String::new(),
            filename: String::new(),
            begin_line: None,
            status: RecordStatus::CompileFailedPair,
            witness_outcome: None,
        }];
    };
    let oracle = witnesses.then(|| StubOracle::new([baseline.clone(), current.clone()]));
    let mut out: Vec<CraterRecord> = report
        .findings
        .iter()
        .map(|f| {
            let mut r = CraterRecord::from_finding(pair, f, RecordStatus::Reported);
            r.witness_outcome = oracle.as_ref().map(|o| witness_outcome(f, baseline, current, o));
            r
        })
        .collect();
    out.extend(
        report
            .hidden_findings
            .iter()
            .map(|f| CraterRecord::from_finding(pair, f, RecordStatus::FilteredDocHidden)),
    );
    out.sort_by(|a, b| (&a.lint_id, &a.item_path, a.status).cmp(&(&b.lint_id, &b.item_path, b.status)));
    out
}

#[derive(Serialize, Deserialize)]
struct CheckpointLine {
    #[serde(rename = "crate")]
    crate_name: String,
    records: Vec<CraterRecord>,
}

fn read_checkpoint(path: &Path) -> Result<BTreeMap<String, Vec<CraterRecord>>, CraterError> {
    let mut done = BTreeMap::new();
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(io_error(path)(e)),
    };
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_error(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CheckpointLine = serde_json::from_str(&line).map_err(|e| CraterError::Checkpoint {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        done.insert(entry.crate_name, entry.records);
    }
    Ok(done)
}

/// Runs the checker over every eligible pair of every crate in the job.
/// Records come out grouped by crate in job order, then by pair. With a
/// checkpoint file, crates already listed there are not re-run and newly
/// finished crates are appended to it.
pub fn run_job(
    job: &CraterJob,
    index: &LocalIndex,
    catalog: &[LintDefinition],
    checkpoint: Option<&Path>,
) -> Result<Vec<CraterRecord>, CraterError> {
    let done = match checkpoint {
        Some(path) => read_checkpoint(path)?,
        None => BTreeMap::new(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job.workers.max(1))
        .build()
        .map_err(|e| CraterError::Io {
            path: "<thread pool>".into(),
            message: e.to_string(),
        })?;

    let mut out = Vec::new();
    for name in &job.crates {
        if let Some(records) = done.get(name) {
            out.extend(records.iter().cloned());
            continue;
        }
        let releases = index.list_releases(name)?;
        let pairs = enumerate_pairs(&releases, job.published_after);
        let records: Vec<CraterRecord> = pool.install(|| {
            pairs
                .par_iter()
                .map(|&pair| run_pair(pair, catalog, job.witnesses))
                .collect::<Vec<_>>()
                .concat()
        });
        if let Some(path) = checkpoint {
            let line = serde_json::to_string(&CheckpointLine {
                crate_name: name.clone(),
                records: records.clone(),
            })
            .expect("checkpoint line serializes");
            let mut file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(io_error(path))?;
            writeln!(file, "{line}").map_err(io_error(path))?;
        }
        out.extend(records);
    }
    Ok(out)
}

/// Per-lint counts over `reported` records, most frequent lint first.
pub fn aggregate_stats(records: &[CraterRecord]) -> Vec<StatsRow> {
    // Per lint: item count, (crate, release) pairs, crates.
    type Tally<'r> = (usize, BTreeSet<(&'r str, &'r str)>, BTreeSet<&'r str>);
    let mut per_lint: BTreeMap<&str, Tally<'_>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.status == RecordStatus::Reported) {
        let entry = per_lint.entry(&r.lint_id).or_default();
        entry.0 += 1;
        entry.1.insert((&r.crate_name, &r.current));
        entry.2.insert(&r.crate_name);
    }
    let mut rows: Vec<StatsRow> = per_lint
        .into_iter()
        .map(|(lint, (items, releases, crates))| StatsRow {
            lint_id: lint.to_string(),
            individual_items: items,
            different_releases: releases.len(),
            affected_crates: crates.len(),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.individual_items
            .cmp(&a.individual_items)
            .then_with(|| a.lint_id.cmp(&b.lint_id))
    });
    rows
}

pub const RECORD_COLUMNS: [&str; 8] = [
    "crate",
    "baseline",
    "current",
    "lint_id",
    "item_path",
    "filename",
    "begin_line",
    "status",
];
pub const STATS_COLUMNS: [&str; 4] = ["lint_id", "individual_items", "different_releases", "affected_crates"];

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink)
}

fn csv_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Writes records as CSV. The `witness_outcome` column is present only when
/// some record carries an outcome.
pub fn write_records<W: Write>(records: &[CraterRecord], sink: W) -> std::io::Result<()> {
    let with_witness = records.iter().any(|r| r.witness_outcome.is_some());
    let mut w = csv_writer(sink);
    let mut header: Vec<&str> = RECORD_COLUMNS.to_vec();
    if with_witness {
        header.push("witness_outcome");
    }
    w.write_record(&header).map_err(csv_error)?;
    for r in records {
        let line = r.begin_line.map(|l| l.to_string()).unwrap_or_default();
        let mut row = vec![
            r.crate_name.as_str(),
            &r.baseline,
            &r.current,
            &r.lint_id,
            &r.item_path,
            &r.filename,
            &line,
            r.status.as_str(),
        ];
        if with_witness {
            row.push(r.witness_outcome.as_deref().unwrap_or(""));
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()
}

pub fn write_stats<W: Write>(rows: &[StatsRow], sink: W) -> std::io::Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(STATS_COLUMNS).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.lint_id.clone(),
            r.individual_items.to_string(),
            r.different_releases.to_string(),
            r.affected_crates.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

/// Reads a records CSV back.
pub fn read_records(text: &str) -> Result<Vec<CraterRecord>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    let with_witness = header.len() == RECORD_COLUMNS.len() + 1;
    if header.iter().take(RECORD_COLUMNS.len()).ne(RECORD_COLUMNS) {
        return Err("unexpected records header".into());
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let field = |i: usize| row.get(i).unwrap_or_default().to_string();
        let begin_line = match row.get(6).unwrap_or_default() {
            "" => None,
            n => Some(n.parse().map_err(|_| format!("bad begin_line `{n}`"))?),
        };
        let status = RecordStatus::parse(&field(7)).ok_or_else(|| format!("bad status `{}`", field(7)))?;
        out.push(CraterRecord {
            crate_name: field(0),
            baseline: field(1),
            current: field(2),
            lint_id: field(3),
            item_path: field(4),
            filename: field(5),
            begin_line,
            status,
            witness_outcome: with_witness.then(|| field(8)).filter(|s| !s.is_empty()),
        });
    }
    Ok(out)
}

/// Paths of the job outputs under `out_dir`.
pub struct CraterOutputs {
    pub records: PathBuf,
    pub stats: PathBuf,
    pub checkpoint: PathBuf,
}

impl CraterOutputs {
    pub fn new(config: &CraterConfig, out_dir: &Path) -> CraterOutputs {
        CraterOutputs {
            records: out_dir.join(&config.records_file),
            stats: out_dir.join(&config.stats_file),
            checkpoint: out_dir.join(&config.checkpoint_file),
        }
    }
}

/// Runs a configured job and writes the records and stats CSVs.
pub fn run_configured(
    config: &CraterConfig,
    index: &LocalIndex,
    catalog: &[LintDefinition],
    out_dir: &Path,
) -> Result<(Vec<CraterRecord>, Vec<StatsRow>), CraterError> {
    std::fs::create_dir_all(out_dir).map_err(io_error(out_dir))?;
    let outputs = CraterOutputs::new(config, out_dir);
    let job = CraterJob::from_config(config, index)?;
    let records = run_job(&job, index, catalog, Some(&outputs.checkpoint))?;
    let stats = aggregate_stats(&records);
    let file = std::fs::File::create(&outputs.records).map_err(io_error(&outputs.records))?;
    write_records(&records, file).map_err(io_error(&outputs.records))?;
    let file = std::fs::File::create(&outputs.stats).map_err(io_error(&outputs.stats))?;
    write_stats(&stats, file).map_err(io_error(&outputs.stats))?;
    Ok((records, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn release(version: &str, yanked: bool, date: &str) -> RegistryEntry {
        let mut e = RegistryEntry::for_tests("x", version, yanked);
        e.published_at = date.parse().unwrap();
        e
    }

    fn versions(pairs: &[(&RegistryEntry, &RegistryEntry)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(b, c)| (b.version.to_string(), c.version.to_string()))
            .collect()
    }

    fn cutoff() -> NaiveDate {
        NaiveDate::from_ymd_opt(2017, 1, 1).unwrap()
    }

    #[test]
    fn adjacent_pairs_skip_major_bumps_and_yanked() {
        let rs: Vec<_> = ["0.1.0", "0.1.1", "0.2.0", "1.0.0"]
            .iter()
            .map(|v| release(v, false, "2020-01-01"))
            .collect();
        assert_eq!(
            versions(&enumerate_pairs(&rs, cutoff())),
            [("0.1.0".into(), "0.1.1".into())]
        );

        let rs = vec![
            release("1.0.0", false, "2020-01-01"),
            release("1.1.0", true, "2020-01-02"),
            release("1.2.0", false, "2020-01-03"),
        ];
        assert_eq!(
            versions(&enumerate_pairs(&rs, cutoff())),
            [("1.0.0".into(), "1.2.0".into())]
        );
        assert!(enumerate_pairs(&rs[..1], cutoff()).is_empty());
    }

    #[test]
    fn date_filter_applies_to_the_newer_release() {
        let rs = vec![
            release("1.0.0", false, "2016-05-01"),
            release("1.0.1", false, "2016-12-31"),
            release("1.0.2", false, "2017-01-01"),
        ];
        assert_eq!(
            versions(&enumerate_pairs(&rs, cutoff())),
            [("1.0.1".into(), "1.0.2".into())]
        );
    }

    fn record(krate: &str, current: &str, lint: &str, item: &str, status: RecordStatus) -> CraterRecord {
        CraterRecord {
            crate_name: krate.into(),
            baseline: "1.0.0".into(),
            current: current.into(),
            lint_id: lint.into(),
            item_path: item.into(),
            filename: "src/lib.rs".into(),
            begin_line: Some(3),
            status,
            witness_outcome: None,
        }
    }

    #[test]
    fn stats_count_items_releases_and_crates() {
        assert!(aggregate_stats(&[]).is_empty());
        let same: Vec<_> = (0..3)
            .map(|i| {
                record(
                    "a",
                    "1.1.0",
                    "struct_missing",
                    &format!("a::S{i}"),
                    RecordStatus::Reported,
                )
            })
            .collect();
        let rows = aggregate_stats(&same);
        assert_eq!(
            (
                rows[0].individual_items,
                rows[0].different_releases,
                rows[0].affected_crates
            ),
            (3, 1, 1)
        );

        let mixed = vec![
            record("a", "1.1.0", "enum_missing", "a::E", RecordStatus::Reported),
            record("b", "1.1.0", "enum_missing", "b::E", RecordStatus::Reported),
            record("b", "1.2.0", "enum_missing", "b::F", RecordStatus::Reported),
            record("b", "1.2.0", "enum_missing", "b::G", RecordStatus::FilteredDocHidden),
            record("a", "1.1.0", "trait_missing", "a::T", RecordStatus::Reported),
        ];
        let rows = aggregate_stats(&mixed);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].lint_id, "enum_missing");
        assert_eq!(
            (
                rows[0].individual_items,
                rows[0].different_releases,
                rows[0].affected_crates
            ),
            (3, 3, 2)
        );
    }

    #[test]
    fn csv_quotes_and_header_only_output() {
        let mut buf = Vec::new();
        write_stats(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "lint_id,individual_items,different_releases,affected_crates\n"
        );

        let mut buf = Vec::new();
        write_records(
            &[record(
                "a",
                "1.1.0",
                "struct_missing",
                "a::S<A, B>",
                RecordStatus::Reported,
            )],
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(",\"a::S<A, B>\","), "{text}");
        assert!(!text.contains('\r'));
    }

    fn arb_record() -> impl Strategy<Value = CraterRecord> {
        let status = prop_oneof![
            Just(RecordStatus::Reported),
            Just(RecordStatus::FilteredDocHidden),
            Just(RecordStatus::CompileFailedPair)
        ];
        (
            "[a-c]",
            "1\\.[0-2]\\.0",
            "(struct_missing|enum_missing|trait_missing)",
            "[a-z:, \"]{0,8}",
            proptest::option::of(0u32..500),
            status,
        )
            .prop_map(|(k, cur, lint, item, line, status)| CraterRecord {
                crate_name: k,
                baseline: "1.0.0".into(),
                current: cur,
                lint_id: lint,
                item_path: item,
                filename: "src/lib.rs".into(),
                begin_line: line,
                status,
                witness_outcome: None,
            })
    }

    proptest! {
        #[test]
        fn stats_survive_a_csv_round_trip(records in proptest::collection::vec(arb_record(), 0..40)) {
            let mut buf = Vec::new();
            write_records(&records, &mut buf).unwrap();
            let back = read_records(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(aggregate_stats(&back), aggregate_stats(&records));
        }

        #[test]
        fn stats_columns_are_ordered(records in proptest::collection::vec(arb_record(), 0..40)) {
            for row in aggregate_stats(&records) {
                prop_assert!(row.affected_crates <= row.different_releases);
                prop_assert!(row.different_releases <= row.individual_items);
            }
        }
    }
}
