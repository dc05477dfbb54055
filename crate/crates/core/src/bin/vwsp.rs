//! Command-line front end: generate benchmark instances, solve them,
//! cross-check with the exhaustive oracles, export MIP models and run
//! parameter-grid benchmarks.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vwsp::bench::{BenchConfig, run_grid, to_csv};
use vwsp::instance::GeneratorParams;
use vwsp::solver::{solve, ImportanceParams, SolveConfig, Termination};
use vwsp::{generator, io, mip, oracle};

/// Exit code when the time limit expired before optimality was proven.
const EXIT_TIME_LIMIT: u8 = 124;
/// Exit code for input or validation problems.
const EXIT_INPUT: u8 = 1;
/// Exit code when a cross-check (oracle agreement) fails.
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "vwsp",
    about = "Exact solver for the valued workflow satisfiability problem",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pseudo-random benchmark instance.
    Generate(GenerateArgs),
    /// Solve an instance file to optimality.
    Solve(SolveArgs),
    /// Solve an instance exhaustively with the reference oracles.
    Oracle(OracleArgs),
    /// Export an instance as an LP-format MIP model.
    ExportMip(ExportArgs),
    /// Solve a grid of generated instances and emit CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of workflow steps.
    #[arg(long)]
    k: u32,
    /// Not-equals constraint density in [0, 1].
    #[arg(long)]
    d: f64,
    /// Counting-constraint multiplier: alpha*k at-most-3 and alpha*k
    /// at-least-3 constraints.
    #[arg(long)]
    alpha: f64,
    /// Seed of the pseudo-random stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Csv,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file to solve.
    #[arg(long = "in")]
    input: PathBuf,
    /// Time limit in seconds (default: none, or VWSP_TIME_LIMIT).
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Verify the result against the exhaustive oracles (small instances).
    #[arg(long)]
    oracle_check: bool,
    /// Importance weight of not-equals constraints.
    #[arg(long, default_value_t = 3.0)]
    imp_not_equals: f64,
    /// Importance weight of at-most constraints.
    #[arg(long, default_value_t = 2.0)]
    imp_at_most: f64,
    /// Importance weight of at-least constraints.
    #[arg(long, default_value_t = 1.0)]
    imp_at_least: f64,
    /// Importance bonus per conflicting constraint pair.
    #[arg(long, default_value_t = 2.0)]
    imp_conflict: f64,
    /// Omit the plan listing from text output.
    #[arg(long)]
    no_plan: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Which oracle to run.
    #[arg(long, value_enum, default_value_t = OracleMethod::Both)]
    method: OracleMethod,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OracleMethod {
    Plans,
    Patterns,
    Both,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Step counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<u32>,
    /// Densities, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<f64>,
    /// Multipliers, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    /// Number of seeds per grid cell.
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    /// First seed value.
    #[arg(long, default_value_t = 0)]
    seed_start: u64,
    /// Per-instance time limit in seconds (default 60, or VWSP_TIME_LIMIT).
    #[arg(long)]
    time_limit: Option<f64>,
    /// Parallel workers.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn env_time_limit() -> Option<f64> {
    let raw = std::env::var("VWSP_TIME_LIMIT").ok()?;
    raw.parse().ok()
}

fn as_duration(seconds: Option<f64>) -> Option<Duration> {
    seconds.and_then(|s| {
        if s.is_finite() && s > 0.0 {
            Some(Duration::from_secs_f64(s))
        } else {
            None
        }
    })
}

fn fail(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {}", err);
    ExitCode::from(EXIT_INPUT)
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<(), std::io::Error> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::ExportMip(args) => cmd_export(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> ExitCode {
    let params = GeneratorParams {
        k: args.k,
        d: args.d,
        alpha: args.alpha,
        seed: args.seed,
    };
    let instance = match generator::generate(params) {
        Ok(instance) => instance,
        Err(err) => return fail(err),
    };
    match write_or_print(args.out.as_ref(), &io::instance_to_json(&instance)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(err),
    }
}

fn cmd_solve(args: SolveArgs) -> ExitCode {
    let instance = match io::read_instance(&args.input) {
        Ok(instance) => instance,
        Err(err) => return fail(err),
    };
    let config = SolveConfig {
        time_limit: as_duration(args.time_limit.or_else(env_time_limit)),
        importance: ImportanceParams {
            not_equals: args.imp_not_equals,
            at_most: args.imp_at_most,
            at_least: args.imp_at_least,
            conflict_bonus: args.imp_conflict,
        },
        ..Default::default()
    };
    let report = match solve(&instance, &config) {
        Ok(report) => report,
        Err(err) => return fail(err),
    };

    match args.format {
        OutputFormat::Text => {
            println!("status: {}", report.termination.name());
            println!("weight: {}", report.weight);
            println!("  constraints: {}", report.constraint_weight);
            println!("  authorisations: {}", report.authorisation_weight);
            println!("satisfiable: {}", report.weight.is_zero());
            if !args.no_plan {
                println!("plan:");
                for s in 0..instance.step_count() {
                    let user = report.plan.get(vwsp::StepId(s)).expect("complete plan");
                    println!("  s{} -> u{}", s, user.0);
                }
            }
            println!("nodes: {}", report.nodes_expanded);
            println!("leaves: {}", report.leaves_evaluated);
            println!("matchings: {}", report.matchings_run);
            println!("time: {:.6}s", report.wall_time.as_secs_f64());
        }
        OutputFormat::Csv => {
            println!(
                "k,n,weight,w_c,w_a,satisfiable,nodes,leaves,matchings,termination,time_s,plan"
            );
            let plan: Vec<String> = (0..instance.step_count())
                .map(|s| {
                    format!(
                        "{}:{}",
                        s,
                        report.plan.get(vwsp::StepId(s)).expect("complete plan").0
                    )
                })
                .collect();
            println!(
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                instance.step_count(),
                instance.user_count(),
                report.weight,
                report.constraint_weight,
                report.authorisation_weight,
                report.weight.is_zero(),
                report.nodes_expanded,
                report.leaves_evaluated,
                report.matchings_run,
                report.termination.name(),
                report.wall_time.as_secs_f64(),
                plan.join(";")
            );
        }
    }

    if args.oracle_check {
        let reference = oracle::oracle_by_plans(&instance)
            .map(|r| r.weight)
            .or_else(|_| oracle::optimal_weight_by_patterns(&instance));
        match reference {
            Ok(reference) if report.termination == Termination::TimeLimit => {
                println!(
                    "oracle-check: optimum is {}, best-so-far was {}",
                    reference, report.weight
                );
            }
            Ok(reference) if reference == report.weight => {
                println!("oracle-check: agreed at weight {}", reference);
            }
            Ok(reference) => {
                eprintln!(
                    "oracle-check FAILED: solver found {}, oracle found {}",
                    report.weight, reference
                );
                return ExitCode::from(EXIT_CHECK_FAILED);
            }
            Err(err) => {
                eprintln!("oracle-check unavailable: {}", err);
                return ExitCode::from(EXIT_CHECK_FAILED);
            }
        }
    }

    match report.termination {
        Termination::TimeLimit => ExitCode::from(EXIT_TIME_LIMIT),
        Termination::Optimal | Termination::BoundMet => ExitCode::SUCCESS,
    }
}

fn cmd_oracle(args: OracleArgs) -> ExitCode {
    let instance = match io::read_instance(&args.input) {
        Ok(instance) => instance,
        Err(err) => return fail(err),
    };
    let mut results = Vec::new();
    if args.method != OracleMethod::Patterns {
        match oracle::oracle_by_plans(&instance) {
            Ok(r) => results.push(("plans", r)),
            Err(err) => return fail(err),
        }
    }
    if args.method != OracleMethod::Plans {
        match oracle::oracle_by_patterns(&instance) {
            Ok(r) => results.push(("patterns", r)),
            Err(err) => return fail(err),
        }
    }
    for (name, r) in &results {
        println!(
            "oracle-{}: weight {} optimal-plans {} candidates {}",
            name, r.weight, r.optimal_count, r.candidates_evaluated
        );
    }
    if results.len() == 2 {
        let (a, b) = (&results[0].1, &results[1].1);
        if a.weight != b.weight || a.optimal_count != b.optimal_count {
            eprintln!("oracle disagreement");
            return ExitCode::from(EXIT_CHECK_FAILED);
        }
    }
    ExitCode::SUCCESS
}

fn cmd_export(args: ExportArgs) -> ExitCode {
    let instance = match io::read_instance(&args.input) {
        Ok(instance) => instance,
        Err(err) => return fail(err),
    };
    let model = match mip::export_mip(&instance) {
        Ok(model) => model,
        Err(err) => return fail(err),
    };
    match write_or_print(args.out.as_ref(), &model) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(err),
    }
}

fn cmd_bench(args: BenchArgs) -> ExitCode {
    for &k in &args.k {
        if let Err(err) = (GeneratorParams {
            k,
            d: args.d[0],
            alpha: args.alpha[0],
            seed: 0,
        })
        .validate()
        {
            return fail(err);
        }
    }
    let config = BenchConfig {
        ks: args.k,
        ds: args.d,
        alphas: args.alpha,
        seed_start: args.seed_start,
        seed_count: args.seeds,
        time_limit: as_duration(args.time_limit.or_else(env_time_limit).or(Some(60.0))),
        workers: args.workers,
    };
    let rows = run_grid(&config);
    let csv = to_csv(&rows);
    match write_or_print(args.out.as_ref(), &csv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(err),
    }
}
