use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use comined_core::benchmarks::{self, CheckStatus};
use comined_core::design::{greedy_select, Criterion};
use comined_core::experiment::{
    self, evaluate_candidates, read_points_csv, ExperimentSpec, Method, ReferenceSpec, Scale,
};
use comined_core::fmt::{g17, sci6};
use comined_core::metrics::csv_field;
use comined_core::{Error, PointSet, RigiditySchedule};

#[derive(Parser)]
#[command(name = "comined", version, about = "Space-filling designs in inequality-constrained regions")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run CoMinED once (it is deterministic).
    Comined(RunArgs),
    /// Run adaptive SCMC once per seed.
    Scmc(RunArgs),
    /// Acceptance/rejection on Latin hypercubes, once per seed.
    LhsReject(RunArgs),
    /// Score an existing candidate CSV against a problem.
    Evaluate(EvaluateArgs),
    /// The benchmark catalog.
    Benchmarks {
        #[command(subcommand)]
        action: BenchAction,
    },
    /// Regenerate a comparison table.
    Reproduce(ReproduceArgs),
}

#[derive(Subcommand)]
enum BenchAction {
    /// Print dimension, constraint counts and feasibility ratio of every problem.
    List,
    /// Check every entry's metadata against a Sobol' ratio estimate.
    Check {
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignCriterion {
    Maximin,
    Maxpro,
}

#[derive(Args)]
struct ReferenceArgs {
    /// Feasible points in the fill-distance reference cloud.
    #[arg(long)]
    reference_target: Option<usize>,
    /// Sobol' points the reference may consume.
    #[arg(long)]
    reference_budget: Option<usize>,
    /// Fail instead of falling back to SCMC when the reference is empty.
    #[arg(long)]
    no_reference_fallback: bool,
    /// Reference cache directory (default: $COMINED_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl ReferenceArgs {
    fn spec(&self, problem: &str) -> ReferenceSpec {
        let mut r = ReferenceSpec::desk(problem);
        if let Some(t) = self.reference_target {
            r.target = t;
        }
        if let Some(b) = self.reference_budget {
            r.max_budget = b;
        }
        r.scmc_fallback = !self.no_reference_fallback;
        r
    }

    fn cache_dir(&self) -> Option<PathBuf> {
        self.cache_dir.clone().or_else(experiment::default_cache_dir)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    problem: String,
    /// Design size.
    #[arg(long)]
    n: usize,
    /// Candidates per design point.
    #[arg(long, default_value_t = 5)]
    q: usize,
    /// `T=<steps>` for the log-spaced schedule, or an explicit comma list.
    #[arg(long, default_value = "T=8")]
    schedule: RigiditySchedule,
    /// Generalized distance exponent; 0 for the geometric mean.
    #[arg(long, default_value_t = 2.0)]
    s: f64,
    /// Constraint value normalization.
    #[arg(long, value_enum, default_value = "on")]
    cvn: OnOff,
    /// Single seed (shorthand for --seeds N).
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Seeds as `a..b` or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    /// SCMC particles; budget-matched to CoMinED when absent.
    #[arg(long)]
    n_particles: Option<usize>,
    /// LHS size; the CoMinED budget when absent.
    #[arg(long)]
    budget: Option<usize>,
    /// Greedy restarts per design.
    #[arg(long, default_value_t = experiment::DESIGN_RESTARTS)]
    restarts: usize,
    /// Results CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON manifest (default: next to --out with a .json extension).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Candidate archive CSV (comined only).
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Design CSV built from the feasible candidates (comined only).
    #[arg(long)]
    design: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "maximin")]
    criterion: DesignCriterion,
    #[command(flatten)]
    reference: ReferenceArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    problem: String,
    /// CSV of unit-cube points; `x1..xp` columns are used when present.
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = experiment::DESIGN_RESTARTS)]
    restarts: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    reference: ReferenceArgs,
}

#[derive(Args)]
struct ReproduceArgs {
    /// 2 for candidate quality, 3 for design scores.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    table: u8,
    #[arg(long, default_value = "desk")]
    scale: Scale,
    /// Restrict to these problems (comma list of table labels).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Summary CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-run CSV.
    #[arg(long)]
    runs: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn parse_seeds(text: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().context("bad seed range start")?;
        let b: u64 = b.trim().parse().context("bad seed range end")?;
        if b <= a {
            bail!("empty seed range {text}");
        }
        return Ok((a..b).collect());
    }
    text.split(',').map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed {s:?}"))).collect()
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_design(path: &Path, points: &PointSet) -> anyhow::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    let header: Vec<String> = (1..=points.dim()).map(|d| format!("x{d}")).collect();
    writeln!(f, "{}", header.join(","))?;
    for x in points.iter() {
        let row: Vec<String> = x.iter().map(|v| g17(*v)).collect();
        writeln!(f, "{}", row.join(","))?;
    }
    f.flush()?;
    Ok(())
}

fn run_method(method: Method, args: RunArgs) -> anyhow::Result<()> {
    let mut spec = ExperimentSpec::new(&args.problem, method, args.n, args.q);
    spec.schedule = args.schedule;
    spec.s = args.s;
    spec.cvn = matches!(args.cvn, OnOff::On);
    spec.seeds = match (&args.seeds, args.seed) {
        (Some(s), _) => parse_seeds(s)?,
        (None, Some(s)) => vec![s],
        (None, None) => vec![0],
    };
    spec.n_particles = args.n_particles;
    spec.lhs_budget = args.budget;
    spec.restarts = args.restarts;
    spec.reference = args.reference.spec(&args.problem);
    if method != Method::Comined && (args.archive.is_some() || args.design.is_some()) {
        bail!(Error::InvalidArgument("--archive and --design apply to comined only".into()));
    }

    let output = experiment::run(&spec, args.reference.cache_dir().as_deref())?;
    write_output(args.out.as_deref(), &output.csv())?;
    let manifest_path = args.manifest.clone().or_else(|| args.out.as_ref().map(|p| p.with_extension("json")));
    if let Some(p) = manifest_path {
        let text = serde_json::to_string_pretty(&output.manifest)?;
        fs::write(&p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(result) = &output.comined {
        if let Some(p) = &args.archive {
            let f = io::BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?);
            result.archive.write_csv(f)?;
        }
        if let Some(p) = &args.design {
            let criterion = match args.criterion {
                DesignCriterion::Maximin => Criterion::Maximin,
                DesignCriterion::Maxpro => Criterion::MaxPro,
            };
            let design = greedy_select(&result.feasible_points(), spec.n, criterion, spec.restarts, 0)?;
            write_design(p, &design.points)?;
        }
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let points = read_points_csv(&args.candidates)?;
    let row = evaluate_candidates(
        &args.problem,
        &points,
        args.n,
        args.restarts,
        &args.reference.spec(&args.problem),
        args.reference.cache_dir().as_deref(),
    )?;
    let text = experiment::rows_csv(std::slice::from_ref(&row));
    write_output(args.out.as_deref(), &text)
}

fn list_benchmarks() -> anyhow::Result<()> {
    let mut out = String::from("key,p,linear,nonlinear,ratio,singular_locus,note\n");
    for e in benchmarks::catalog() {
        out.push_str(
            &[
                csv_field(e.key),
                e.expected_dim.to_string(),
                e.expected_lic.to_string(),
                e.expected_nic.to_string(),
                format!("{:.4}", e.expected_ratio),
                csv_field(e.singular_locus.unwrap_or("")),
                csv_field(e.note.unwrap_or("")),
            ]
            .join(","),
        );
        out.push('\n');
    }
    write_output(None, &out)
}

fn check_benchmarks(budget: usize) -> anyhow::Result<bool> {
    let mut ok = true;
    for e in benchmarks::catalog() {
        let check = benchmarks::spot_check(&e, budget)?;
        for item in &check.items {
            let status = match item.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Flag => "flag",
                CheckStatus::Fail => "FAIL",
            };
            println!(
                "{:<6} {:<18} {status:<4} expected={} actual={} {}",
                check.key,
                item.field,
                sci6(item.expected),
                sci6(item.actual),
                item.detail
            );
        }
        ok &= check.passed();
    }
    Ok(ok)
}

fn reproduce(args: ReproduceArgs) -> anyhow::Result<()> {
    let cache = args.cache_dir.clone().or_else(experiment::default_cache_dir);
    let rep = experiment::reproduce(args.scale, &args.only, cache.as_deref())?;
    write_output(args.out.as_deref(), &rep.summary_csv(args.table))?;
    if let Some(p) = &args.runs {
        fs::write(p, rep.runs_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    log::info!("reproduction took {:.1} s", rep.wall_time_secs);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => 3,
        Some(Error::Io(_)) => 1,
        Some(_) => 2,
        None if err.downcast_ref::<io::Error>().is_some() => 1,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Comined(a) => run_method(Method::Comined, a),
        Command::Scmc(a) => run_method(Method::Scmc, a),
        Command::LhsReject(a) => run_method(Method::LhsReject, a),
        Command::Evaluate(a) => evaluate(a),
        Command::Benchmarks { action: BenchAction::List } => list_benchmarks(),
        Command::Benchmarks { action: BenchAction::Check { budget } } => match check_benchmarks(budget) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("error: benchmark check failed");
                return ExitCode::from(2);
            }
            Err(e) => Err(e),
        },
        Command::Reproduce(a) => reproduce(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
