use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sitplan::bench::{self, HeuristicMode, Outcome, RunError, RunOptions};
use sitplan::search::ResourceLimits;
use sitplan::validate::{parse_plan, validate, Verdict};

const EXIT_OK: u8 = 0;
const EXIT_UNSOLVED: u8 = 1;
const EXIT_INVALID_PLAN: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "sitplan",
    version,
    about = "Lifted A* planner over situation trees"
)]
struct Cli {
    /// Log progress to stderr
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance
    Plan(PlanArgs),
    /// Check a plan file against an instance
    Validate {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Run every instance listed in a manifest
    Bench {
        /// One `domain problem` pair per line, relative to the manifest
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Write the plan here instead of stdout
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Write the run record and search statistics as JSON
    #[arg(long)]
    stats_out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// Maximum plan length
    #[arg(long, default_value_t = 100)]
    bound: usize,
    #[arg(long, value_enum, default_value_t = HeuristicArg::Rpg)]
    heuristic: HeuristicArg,
    /// Cache reachability sub-results inside each heuristic call
    #[arg(long)]
    memo: bool,
    /// Skip situations whose state was already expanded
    #[arg(long)]
    dedup: bool,
    /// Search time limit in seconds
    #[arg(long, default_value_t = 1800)]
    timeout: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicArg {
    Rpg,
    Zero,
}

impl SearchArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            bound: self.bound,
            heuristic: match self.heuristic {
                HeuristicArg::Rpg => HeuristicMode::Rpg,
                HeuristicArg::Zero => HeuristicMode::Zero,
            },
            memo: self.memo,
            dedup: self.dedup,
            limits: ResourceLimits {
                timeout: Some(Duration::from_secs(self.timeout)),
                ..ResourceLimits::default()
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let code = match cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Validate {
            domain,
            problem,
            plan,
        } => cmd_validate(&domain, &problem, &plan),
        Command::Bench {
            manifest,
            out,
            jobs,
            search,
        } => cmd_bench(&manifest, &out, jobs, &search.options()),
    };
    ExitCode::from(code)
}

fn write_file(path: &Path, contents: &str) -> Result<(), u8> {
    fs::write(path, contents).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_USAGE
    })
}

fn cmd_plan(args: PlanArgs) -> u8 {
    let opts = args.search.options();
    let out = match bench::run(&args.domain, &args.problem, &opts) {
        Ok(out) => out,
        Err(e @ RunError::InvalidPlan { .. }) => {
            eprintln!("internal error: {e}");
            return EXIT_INVALID_PLAN;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    for w in &out.task.warnings {
        eprintln!("warning: {w}");
    }
    let r = &out.record;
    if let Some(text) = &out.plan_text {
        match &args.plan_out {
            Some(path) => {
                if let Err(code) = write_file(path, text) {
                    return code;
                }
            }
            None => print!("{text}"),
        }
    }
    if let Some(path) = &args.stats_out {
        let json = serde_json::json!({ "run": r, "search": out.stats });
        let text = serde_json::to_string_pretty(&json).expect("stats serialize");
        if let Err(code) = write_file(path, &text) {
            return code;
        }
    }
    eprintln!(
        "{}: {} length={} visited={} time={:.1}ms",
        r.problem_name,
        serde_json::to_value(r.outcome)
            .expect("outcome serializes")
            .as_str()
            .unwrap_or("?"),
        r.plan_length.map_or("-".to_string(), |l| l.to_string()),
        r.situations_visited,
        r.time_total_ms
    );
    match r.outcome {
        Outcome::Solved => EXIT_OK,
        Outcome::UnsolvedWithinBound => EXIT_UNSOLVED,
        Outcome::Timeout => EXIT_TIMEOUT,
        Outcome::Error => EXIT_USAGE,
    }
}

fn cmd_validate(domain: &Path, problem: &Path, plan: &Path) -> u8 {
    let task = match bench::load(domain, problem, usize::MAX) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let text = match fs::read_to_string(plan) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", plan.display());
            return EXIT_USAGE;
        }
    };
    let actions = match parse_plan(&task, &text) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}: {e}", plan.display());
            return EXIT_USAGE;
        }
    };
    let verdict = validate(&task, &actions);
    println!("{verdict}");
    if verdict == Verdict::Valid {
        EXIT_OK
    } else {
        EXIT_INVALID_PLAN
    }
}

fn cmd_bench(manifest: &Path, out: &Path, jobs: usize, opts: &RunOptions) -> u8 {
    match bench::bench(manifest, out, opts, jobs) {
        Ok((records, report)) => {
            for (name, agg) in &report.domains {
                println!(
                    "{name}: tested={} kept={} mean_r={} fraction_r>={}={}",
                    agg.tested,
                    agg.kept,
                    agg.mean_r.map_or("-".into(), |v| format!("{v:.3}")),
                    report.threshold,
                    agg.fraction_r_at_least_threshold
                        .map_or("-".into(), |v| format!("{v:.3}")),
                );
            }
            let errors = records
                .iter()
                .filter(|r| r.outcome == Outcome::Error)
                .count();
            if errors > 0 {
                eprintln!(
                    "{errors} run(s) failed; see {}",
                    out.join(bench::RUNS_JSONL).display()
                );
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
