//! `ppds`: PCP-vs-CP experiments, step-size region grids and single solves.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ppds::bench::{
    emit_region_grid, grid_to_csv, run_experiment_with, run_solve_config, to_csv, to_markdown, BenchError, CsvOptions,
    EntryDistribution, ExperimentConfig, FeasibilityMode, SolveConfig, SolveConfigError,
};
use ppds::par::Execution;
use ppds::solver::StopReason;

const EXIT_OK: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_REGIME: u8 = 3;
const EXIT_MAX_ITER: u8 = 4;

#[derive(Parser)]
#[command(name = "ppds", version, about = "Projected primal-dual splitting: experiments and solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Table1,
    Table2,
    Table3,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Right-hand sides from a planted point
    Feasible,
    /// Right-hand sides drawn directly
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum Entries {
    Uniform,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "table2")]
    preset: Preset,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Rows of S
    #[arg(long)]
    n: Option<usize>,
    /// Rows of R (the projected block)
    #[arg(long)]
    m: Option<usize>,
    /// Number of unknowns
    #[arg(long)]
    nn: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum)]
    entries: Option<Entries>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma-separated, strictly decreasing
    #[arg(long, value_delimiter = ',')]
    tolerances: Option<Vec<f64>>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Run realizations one after another
    #[arg(long)]
    sequential: bool,
    /// Leave timing columns out of the CSV
    #[arg(long)]
    no_timing: bool,
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compare PCP against CP on random constrained l1 problems
    Bench(BenchArgs),
    /// Step-size region grid over [0, 2b]^2
    Regions {
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one problem described by a JSON file
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), u8> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", p.display());
            EXIT_FAILURE
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bench_error(e: BenchError) -> u8 {
    eprintln!("error: {e}");
    match e {
        BenchError::InvalidConfig(_) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn bench(args: BenchArgs) -> Result<(), u8> {
    let mut cfg = match args.preset {
        Preset::Table1 => ExperimentConfig::table1(),
        Preset::Table2 => ExperimentConfig::table2(),
        Preset::Table3 => ExperimentConfig::table3(),
    };
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.realizations = args.realizations.unwrap_or(cfg.realizations);
    cfg.n = args.n.unwrap_or(cfg.n);
    cfg.m = args.m.unwrap_or(cfg.m);
    cfg.nn = args.nn.unwrap_or(cfg.nn);
    cfg.gamma = args.gamma.unwrap_or(cfg.gamma);
    cfg.max_iter = args.max_iter.unwrap_or(cfg.max_iter);
    if let Some(t) = args.tolerances {
        cfg.tolerances = t;
    }
    if let Some(mode) = args.mode {
        cfg.feasibility_mode = match mode {
            Mode::Feasible => FeasibilityMode::GenerateFromPoint,
            Mode::Raw => FeasibilityMode::RawRandom,
        };
    }
    if let Some(e) = args.entries {
        cfg.entries = match e {
            Entries::Uniform => EntryDistribution::Uniform01,
            Entries::Gaussian => EntryDistribution::StandardGaussian,
        };
    }
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let result = run_experiment_with(&cfg, exec).map_err(bench_error)?;
    let text = match args.format {
        Format::Csv => to_csv(&result, CsvOptions { include_timing: !args.no_timing }),
        Format::Md => to_markdown(&result),
    };
    emit(args.out.as_deref(), &text)?;
    if result.rows.iter().any(|r| r.flagged) {
        eprintln!("warning: some runs hit max_iter = {}", cfg.max_iter);
        return Err(EXIT_MAX_ITER);
    }
    Ok(())
}

fn regions(b: f64, resolution: usize, out: Option<&Path>) -> Result<(), u8> {
    let cells = emit_region_grid(b, resolution).map_err(bench_error)?;
    emit(out, &grid_to_csv(&cells))
}

fn solve(config: &Path, out: Option<&Path>) -> Result<(), u8> {
    let text = fs::read_to_string(config).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", config.display());
        EXIT_CONFIG
    })?;
    let outcome = SolveConfig::from_json(&text).and_then(|cfg| run_solve_config(&cfg)).map_err(|e| {
        eprintln!("error: {e}");
        match e {
            SolveConfigError::Config(_) => EXIT_CONFIG,
            SolveConfigError::Regime(_) => EXIT_REGIME,
            SolveConfigError::Solver(_) => EXIT_FAILURE,
        }
    })?;
    let json = serde_json::to_string_pretty(&outcome).expect("report is serializable");
    emit(out, &(json + "\n"))?;
    if outcome.stop_reason == StopReason::MaxIterations {
        eprintln!("warning: stopped at max_iter after {} iterations", outcome.iterations);
        return Err(EXIT_MAX_ITER);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Bench(args) => bench(args),
        Command::Regions { b, resolution, out } => regions(b, resolution, out.as_deref()),
        Command::Solve { config, out } => solve(&config, out.as_deref()),
    };
    ExitCode::from(status.err().unwrap_or(EXIT_OK))
}
