//! Single-instance runs and suite benchmarking with per-run records.
//!
//! A manifest lists one `domain problem` pair per line, paths relative to
//! the manifest file. `#` starts a comment.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bat::{GroundAction, PlanningTask};
use crate::heuristic::{Heuristic, RpgHeuristic, ZeroHeuristic};
use crate::pddl::{compile, parse_domain, parse_problem, PddlError};
use crate::search::{extract_plan, plan, ResourceLimits, SearchConfig, SearchOutcome, SearchStats};
use crate::validate::{format_plan, parse_plan, validate, Verdict};

/// Runs with r at or above this count toward the reported fraction.
pub const R_THRESHOLD: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicMode {
    Rpg,
    Zero,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub bound: usize,
    pub heuristic: HeuristicMode,
    pub memo: bool,
    pub dedup: bool,
    pub limits: ResourceLimits,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            bound: 100,
            heuristic: HeuristicMode::Rpg,
            memo: false,
            dedup: false,
            limits: ResourceLimits::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Solved,
    UnsolvedWithinBound,
    /// Any resource limit, including frontier and visited caps.
    Timeout,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub domain_name: String,
    pub problem_name: String,
    pub outcome: Outcome,
    pub plan_length: Option<usize>,
    pub situations_visited: u64,
    pub time_total_ms: f64,
    pub time_preprocess_ms: f64,
    pub time_per_step_ms: f64,
    pub ratio_r: Option<f64>,
    pub heuristic: HeuristicMode,
    pub dedup: bool,
    pub memo: bool,
    pub error: Option<String>,
}

impl RunRecord {
    /// Solved with at least one step; the runs that enter the aggregates.
    pub fn is_kept(&self) -> bool {
        self.outcome == Outcome::Solved && self.plan_length.unwrap_or(0) > 0
    }

    fn failed(domain: String, problem: String, opts: &RunOptions, err: String) -> Self {
        RunRecord {
            domain_name: domain,
            problem_name: problem,
            outcome: Outcome::Error,
            plan_length: None,
            situations_visited: 0,
            time_total_ms: 0.0,
            time_preprocess_ms: 0.0,
            time_per_step_ms: 0.0,
            ratio_r: None,
            heuristic: opts.heuristic,
            dedup: opts.dedup,
            memo: opts.memo,
            error: Some(err),
        }
    }
}

pub fn ratio(plan_length: usize, visited: u64) -> f64 {
    plan_length as f64 / visited as f64
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<PddlError>,
    },
    #[error("plan for {problem} failed validation: {verdict}")]
    InvalidPlan { problem: String, verdict: Verdict },
}

#[derive(Debug)]
pub struct RunOutput {
    pub record: RunRecord,
    pub task: PlanningTask,
    pub plan: Option<Vec<GroundAction>>,
    /// Plan in file format; validated before the record was built.
    pub plan_text: Option<String>,
    pub stats: SearchStats,
}

fn read(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(
    domain_path: &Path,
    problem_path: &Path,
    bound: usize,
) -> Result<PlanningTask, RunError> {
    let domain_text = read(domain_path)?;
    let problem_text = read(problem_path)?;
    let domain = parse_domain(&domain_text).map_err(|source| RunError::Parse {
        path: domain_path.to_path_buf(),
        source: Box::new(source),
    })?;
    let problem = parse_problem(&problem_text, &domain).map_err(|source| RunError::Parse {
        path: problem_path.to_path_buf(),
        source: Box::new(source),
    })?;
    compile(&domain, &problem, bound).map_err(|source| RunError::Parse {
        path: problem_path.to_path_buf(),
        source: Box::new(source),
    })
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Parse, compile, search and validate one instance.
pub fn run(
    domain_path: &Path,
    problem_path: &Path,
    opts: &RunOptions,
) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let task = load(domain_path, problem_path, opts.bound)?;
    let preprocess = start.elapsed();

    let config = SearchConfig {
        limits: opts.limits.clone(),
        cache_states: false,
        dedup: opts.dedup,
    };
    let outcome = match opts.heuristic {
        HeuristicMode::Rpg => plan(
            &task,
            &RpgHeuristic { memo: opts.memo } as &dyn Heuristic,
            &config,
        ),
        HeuristicMode::Zero => plan(&task, &ZeroHeuristic, &config),
    };

    let (kind, actions) = match &outcome {
        SearchOutcome::Plan { situation, .. } => (Outcome::Solved, Some(extract_plan(situation))),
        SearchOutcome::NoPlanWithinBound { .. } => (Outcome::UnsolvedWithinBound, None),
        SearchOutcome::ResourceLimit { .. } => (Outcome::Timeout, None),
    };

    // validate the text that will be written, not the in-memory plan
    let plan_text = match &actions {
        Some(actions) => {
            let text = format_plan(&task, actions);
            let verdict = match parse_plan(&task, &text) {
                Ok(reparsed) => validate(&task, &reparsed),
                Err(_) => Verdict::PreconditionFailed { step: 0 },
            };
            if !verdict.is_valid() {
                return Err(RunError::InvalidPlan {
                    problem: task.problem_name.clone(),
                    verdict,
                });
            }
            Some(text)
        }
        None => None,
    };

    let stats = outcome.stats().clone();
    let total = preprocess + stats.wall_time;
    let plan_length = actions.as_ref().map(Vec::len);
    let record = RunRecord {
        domain_name: task.domain_name.clone(),
        problem_name: task.problem_name.clone(),
        outcome: kind,
        plan_length,
        situations_visited: stats.situations_visited,
        time_total_ms: ms(total),
        time_preprocess_ms: ms(preprocess),
        time_per_step_ms: ms(total) / plan_length.unwrap_or(0).max(1) as f64,
        ratio_r: plan_length.map(|l| ratio(l, stats.situations_visited)),
        heuristic: opts.heuristic,
        dedup: opts.dedup,
        memo: opts.memo,
        error: None,
    };
    Ok(RunOutput {
        record,
        task,
        plan: actions,
        plan_text,
        stats,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DomainAggregate {
    pub tested: usize,
    pub kept: usize,
    pub zero_step: usize,
    pub timeouts: usize,
    pub unsolved: usize,
    pub errors: usize,
    /// Mean r over kept runs; absent when none were kept.
    pub mean_r: Option<f64>,
    pub fraction_r_at_least_threshold: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub threshold: f64,
    pub domains: BTreeMap<String, DomainAggregate>,
}

/// Per-domain aggregates. Records are summed in the order given.
pub fn aggregate(records: &[RunRecord]) -> SuiteReport {
    let mut sums: BTreeMap<String, (DomainAggregate, f64, usize)> = BTreeMap::new();
    for r in records {
        let (agg, sum, hits) = sums.entry(r.domain_name.clone()).or_default();
        agg.tested += 1;
        match r.outcome {
            Outcome::Solved if r.is_kept() => {
                agg.kept += 1;
                let ratio = r
                    .ratio_r
                    .unwrap_or_else(|| ratio(r.plan_length.unwrap_or(0), r.situations_visited));
                *sum += ratio;
                if ratio >= R_THRESHOLD {
                    *hits += 1;
                }
            }
            Outcome::Solved => agg.zero_step += 1,
            Outcome::Timeout => agg.timeouts += 1,
            Outcome::UnsolvedWithinBound => agg.unsolved += 1,
            Outcome::Error => agg.errors += 1,
        }
    }
    let domains = sums
        .into_iter()
        .map(|(name, (mut agg, sum, hits))| {
            if agg.kept > 0 {
                agg.mean_r = Some(sum / agg.kept as f64);
                agg.fraction_r_at_least_threshold = Some(hits as f64 / agg.kept as f64);
            }
            (name, agg)
        })
        .collect();
    SuiteReport {
        threshold: R_THRESHOLD,
        domains,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub domain: PathBuf,
    pub problem: PathBuf,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: expected `domain problem`")]
    Manifest { path: PathBuf, line: usize },
    #[error("writing {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("writing {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, BenchError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [domain, problem] = fields[..] else {
            return Err(BenchError::Manifest {
                path: path.to_path_buf(),
                line: i + 1,
            });
        };
        entries.push(ManifestEntry {
            domain: base.join(domain),
            problem: base.join(problem),
        });
    }
    Ok(entries)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Best-effort domain name for a run that failed before compiling.
fn fallback_domain_name(path: &Path) -> String {
    fs::read_to_string(path)
        .ok()
        .and_then(|t| parse_domain(&t).ok())
        .map(|d| d.name)
        .unwrap_or_else(|| stem(path))
}

/// Runs one entry, turning every failure into an error record.
fn run_entry(entry: &ManifestEntry, opts: &RunOptions) -> (RunRecord, Option<String>) {
    let result = catch_unwind(AssertUnwindSafe(|| {
        run(&entry.domain, &entry.problem, opts)
    }));
    match result {
        Ok(Ok(out)) => (out.record, out.plan_text),
        Ok(Err(e)) => {
            let domain = fallback_domain_name(&entry.domain);
            (
                RunRecord::failed(domain, stem(&entry.problem), opts, e.to_string()),
                None,
            )
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            let domain = fallback_domain_name(&entry.domain);
            (
                RunRecord::failed(domain, stem(&entry.problem), opts, format!("panic: {msg}")),
                None,
            )
        }
    }
}

pub const RUNS_JSONL: &str = "runs.jsonl";
pub const RUNS_CSV: &str = "runs.csv";
pub const SUITE_JSON: &str = "suite.json";
pub const PLANS_DIR: &str = "plans";

/// Path of a run's plan file inside a bench output directory.
pub fn plan_path(out_dir: &Path, record: &RunRecord) -> PathBuf {
    out_dir
        .join(PLANS_DIR)
        .join(&record.domain_name)
        .join(format!("{}.plan", record.problem_name))
}

/// Runs every manifest entry on `jobs` worker threads and writes
/// `runs.jsonl` (in completion order), `runs.csv` (in manifest order),
/// `suite.json` and one plan file per solved run.
pub fn bench(
    manifest: &Path,
    out_dir: &Path,
    opts: &RunOptions,
    jobs: usize,
) -> Result<(Vec<RunRecord>, SuiteReport), BenchError> {
    let entries = read_manifest(manifest)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let jsonl_path = out_dir.join(RUNS_JSONL);
    let jsonl = fs::File::create(&jsonl_path).map_err(io_err(&jsonl_path))?;

    struct Sink {
        jsonl: BufWriter<fs::File>,
        records: Vec<Option<RunRecord>>,
        error: Option<BenchError>,
    }
    let sink = Mutex::new(Sink {
        jsonl: BufWriter::new(jsonl),
        records: vec![None; entries.len()],
        error: None,
    });
    let next = AtomicUsize::new(0);
    let jobs = jobs.clamp(1, entries.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(entry) = entries.get(i) else { break };
                let (record, plan_text) = run_entry(entry, opts);
                log::info!(
                    "{}/{}: {:?} len={:?} visited={} {:.1}ms",
                    record.domain_name,
                    record.problem_name,
                    record.outcome,
                    record.plan_length,
                    record.situations_visited,
                    record.time_total_ms
                );
                let plan_err = plan_text.and_then(|text| {
                    let path = plan_path(out_dir, &record);
                    let dir = path.parent().unwrap_or(out_dir);
                    fs::create_dir_all(dir)
                        .and_then(|_| fs::write(&path, text))
                        .err()
                        .map(|source| BenchError::Io { path, source })
                });
                let mut sink = sink.lock().unwrap_or_else(|p| p.into_inner());
                let line = serde_json::to_string(&record).expect("records serialize");
                if let Err(source) = writeln!(sink.jsonl, "{line}") {
                    sink.error.get_or_insert(BenchError::Io {
                        path: jsonl_path.clone(),
                        source,
                    });
                }
                if let Some(e) = plan_err {
                    sink.error.get_or_insert(e);
                }
                sink.records[i] = Some(record);
            });
        }
    });

    let mut sink = sink.into_inner().unwrap_or_else(|p| p.into_inner());
    if let Some(e) = sink.error {
        return Err(e);
    }
    sink.jsonl.flush().map_err(io_err(&jsonl_path))?;
    let records: Vec<RunRecord> = sink.records.into_iter().flatten().collect();

    let csv_path = out_dir.join(RUNS_CSV);
    write_csv(&csv_path, &records)?;
    let report = aggregate(&records);
    let suite_path = out_dir.join(SUITE_JSON);
    let json = serde_json::to_string_pretty(&report).map_err(|source| BenchError::Json {
        path: suite_path.clone(),
        source,
    })?;
    fs::write(&suite_path, json).map_err(io_err(&suite_path))?;
    Ok((records, report))
}

pub fn write_csv(path: &Path, records: &[RunRecord]) -> Result<(), BenchError> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}
