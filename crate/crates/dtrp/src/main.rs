use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use dtrp::bench::{bench_domain, parse_strategy, write_csv, Algo, Sweep};
use dtrp::bundled::bundled;
use dtrp::generate::{generate, GenParams};
use dtrp::parallel::RayonEvaluator;
use dtrp::result::{ResultDoc, RunStats};
use dtrp::{parse_domain, serialize_domain};
use dtrp_core::baselines::enumerate_optimal;
use dtrp_core::{validate_domain, Domain, Model, Planner, Strategy};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "dtrp", version, about = "Decision-theoretic refinement planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the optimal plans of a domain.
    Plan(PlanArgs),
    /// Evaluate every concrete plan and report the optimal ones.
    Enumerate(EnumerateArgs),
    /// Check a domain file and print every issue found.
    Validate {
        /// Domain file, or the name of a bundled domain.
        domain: String,
    },
    /// Compare strategies and the branch-and-bound baseline as CSV.
    Bench(BenchArgs),
    /// Write a random domain.
    Gen(GenArgs),
}

#[derive(Args)]
struct DomainArgs {
    /// Domain file, or the name of a bundled domain.
    domain: String,
    /// Override a named constant, e.g. COST_FATALITY=500000.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    input: DomainArgs,
    #[arg(long, default_value = "priority", value_parser = parse_strategy)]
    strategy: Strategy,
    /// Analyse only this fraction of the most likely chronicles when using
    /// the sensitivity strategy.
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long, value_name = "N")]
    budget_expansions: Option<usize>,
    #[arg(long, value_name = "N")]
    budget_ms: Option<u64>,
    /// Evaluate child plans on this many threads.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    input: DomainArgs,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Domain files or bundled domain names.
    #[arg(required = true)]
    domains: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "first,priority,sensitivity", value_parser = parse_strategy)]
    strategies: Vec<Strategy>,
    #[arg(long, value_name = "NAME=LO:HI:STEPS")]
    sweep: Option<Sweep>,
    #[arg(long, default_value = "both")]
    algo: Algo,
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    depth: u32,
    #[arg(long, default_value_t = 4)]
    branching: u32,
    #[arg(long, default_value_t = 100)]
    plans_target: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl From<dtrp_core::Error> for CliError {
    fn from(e: dtrp_core::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Domain(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Plan(a) => plan(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Validate { domain } => validate(&domain),
        Command::Bench(a) => bench(a),
        Command::Gen(a) => gen(a),
    }
}

fn read_domain(spec: &str) -> Result<Domain, CliError> {
    let path = Path::new(spec);
    let text = if path.exists() {
        fs::read_to_string(path).map_err(|e| io_error(path, e))?
    } else if let Some(text) = bundled(spec) {
        text.to_string()
    } else {
        return Err(CliError::Domain(format!("{spec}: no such file or bundled domain")));
    };
    parse_domain(&text).map_err(|e| CliError::Domain(format!("{spec}: {e}")))
}

fn apply_params(d: &mut Domain, params: &[String]) -> Result<Map<String, Value>, CliError> {
    let mut echo = Map::new();
    for p in params {
        let (name, value) = p
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--param `{p}` is not NAME=VALUE")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--param `{p}`: `{value}` is not a number")))?;
        if !d.set_constant(name.trim(), v) {
            return Err(CliError::Usage(format!("--param `{p}`: the domain has no constant `{name}`")));
        }
        echo.insert(name.trim().to_string(), json!(v));
    }
    Ok(echo)
}

/// Reads, overrides and validates a domain.
fn load(spec: &str, params: &[String]) -> Result<(Domain, Map<String, Value>), CliError> {
    let mut d = read_domain(spec)?;
    let echo = apply_params(&mut d, params)?;
    let report = validate_domain(&d);
    if !report.is_empty() {
        let lines: Vec<String> = report.issues.iter().map(|i| i.to_string()).collect();
        return Err(CliError::Domain(format!("{spec} is invalid:\n{}", lines.join("\n"))));
    }
    Ok((d, echo))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_error(p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Domain(e.to_string())),
    }
}

fn plan(a: PlanArgs) -> Result<ExitCode, CliError> {
    let (d, params) = load(&a.input.domain, &a.input.params)?;
    let strategy = match (a.strategy, a.fraction) {
        (Strategy::Sensitivity { .. }, Some(f)) if f > 0.0 && f <= 1.0 => Strategy::Sensitivity { fraction: f },
        (_, Some(f)) if !(f > 0.0 && f <= 1.0) => {
            return Err(CliError::Usage(format!("--fraction {f} is outside (0, 1]")));
        }
        (_, Some(_)) => return Err(CliError::Usage("--fraction applies to the sensitivity strategy only".into())),
        (s, None) => s,
    };
    if a.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be positive".into()));
    }
    let model = Model::new(d)?;
    let start = Instant::now();
    let run = || {
        let mut p = Planner::new(&model, strategy);
        if let Some(n) = a.budget_expansions {
            p = p.max_expansions(n);
        }
        if let Some(ms) = a.budget_ms {
            let limit = Duration::from_millis(ms);
            p = p.stop_when(move || start.elapsed() >= limit);
        }
        if a.jobs.is_some_and(|j| j > 1) {
            p = p.evaluator(&RayonEvaluator);
        }
        p.run()
    };
    let outcome = match a.jobs {
        Some(j) if j > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(run)?,
        _ => run()?,
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut config = Map::new();
    config.insert("command".into(), json!("plan"));
    config.insert("domain".into(), json!(a.input.domain));
    config.insert("strategy".into(), json!(strategy.name()));
    if let Strategy::Sensitivity { fraction } = strategy {
        config.insert("fraction".into(), json!(fraction));
    }
    config.insert("params".into(), Value::Object(params));
    config.insert("budget_expansions".into(), json!(a.budget_expansions));
    config.insert("budget_ms".into(), json!(a.budget_ms));
    let doc = ResultDoc {
        plans: ResultDoc::entries(&model, outcome.plans.iter().map(|p| (p.steps.clone(), p.eu))),
        stats: RunStats {
            plans_evaluated: outcome.stats.plans_evaluated,
            expansions: outcome.stats.expansions,
            peak_states: outcome.stats.peak_states,
            wall_ms,
            complete: outcome.complete,
        },
        config,
    };
    emit(&doc.render(), a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn enumerate(a: EnumerateArgs) -> Result<ExitCode, CliError> {
    let (d, params) = load(&a.input.domain, &a.input.params)?;
    let model = Model::new(d)?;
    let start = Instant::now();
    let e = enumerate_optimal(&model)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut config = Map::new();
    config.insert("command".into(), json!("enumerate"));
    config.insert("domain".into(), json!(a.input.domain));
    config.insert("params".into(), Value::Object(params));
    let doc = ResultDoc {
        plans: ResultDoc::entries(&model, e.optimal.iter().map(|s| (s.steps.clone(), s.eu))),
        stats: RunStats {
            plans_evaluated: e.plans_evaluated,
            expansions: 0,
            peak_states: e.peak_states,
            wall_ms,
            complete: true,
        },
        config,
    };
    emit(&doc.render(), a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn validate(spec: &str) -> Result<ExitCode, CliError> {
    let d = read_domain(spec)?;
    let report = validate_domain(&d);
    if report.is_empty() {
        println!("{spec}: ok");
        return Ok(ExitCode::SUCCESS);
    }
    for issue in &report.issues {
        println!("{issue}");
    }
    Ok(ExitCode::from(1))
}

fn bench(a: BenchArgs) -> Result<ExitCode, CliError> {
    // every domain is loaded before any work so that a bad file writes nothing
    let mut domains = Vec::with_capacity(a.domains.len());
    for spec in &a.domains {
        let (d, _) = load(spec, &a.params)?;
        if let Some(s) = &a.sweep {
            if d.constant(&s.name).is_none() {
                return Err(CliError::Usage(format!("--sweep: {spec} has no constant `{}`", s.name)));
            }
        }
        domains.push((spec.clone(), d));
    }
    let mut rows = Vec::new();
    for (spec, d) in &domains {
        let name = Path::new(spec)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(spec);
        rows.extend(bench_domain(name, d, &a.strategies, a.sweep.as_ref(), a.algo)?);
    }
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(|e| CliError::Domain(e.to_string()))?;
    emit(&String::from_utf8(buf).expect("csv output is utf-8"), a.csv.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn gen(a: GenArgs) -> Result<ExitCode, CliError> {
    if a.depth == 0 || a.branching < 2 || a.plans_target == 0 {
        return Err(CliError::Usage(
            "--depth and --plans-target must be positive and --branching at least 2".into(),
        ));
    }
    let d = generate(&GenParams {
        seed: a.seed,
        depth: a.depth,
        branching: a.branching,
        plans_target: a.plans_target,
    });
    emit(&serialize_domain(&d), a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}
