use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ising_reram::bench::{kernel_energy_report, kernels_csv, run_suite, BenchSuite};
use ising_reram::{parse_dimacs, random_3sat, run_problem, Problem, RunConfig};

/// Seed used when no `--seed` flag is given.
const SEED_ENV: &str = "ISING_RERAM_SEED";

#[derive(Parser)]
#[command(
    name = "ising-reram",
    version,
    about = "3-SAT on a simulated ReRAM Ising crossbar"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a DIMACS CNF file and print the JSON run report.
    Solve {
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Size the array to the instance instead of using the configured
        /// dimensions.
        #[arg(long)]
        fit: bool,
    },
    /// Run a benchmark suite and emit per-instance accuracy and energy CSV.
    Bench {
        #[arg(long, default_value = "paper")]
        suite: String,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Profile kernel programming and column flip energies.
    Kernels {
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Emit a random 3-SAT instance in DIMACS form.
    Gen {
        #[arg(long)]
        vars: usize,
        #[arg(long)]
        clauses: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Failure to run at all: bad input, bad config, unwritable output.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn resolve_seed(flag: Option<u64>, fallback: u64) -> Result<u64, InputError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| InputError(format!("{SEED_ENV}={text:?} is not an unsigned integer"))),
        Err(_) => Ok(fallback),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, InputError> {
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.device.validate()?;
    cfg.solver.validate()?;
    Ok(cfg)
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), InputError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| InputError(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, InputError> {
    match command {
        Command::Solve {
            file,
            seed,
            config,
            report,
            fit,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.solver.seed = resolve_seed(seed, cfg.solver.seed)?;
            let text = std::fs::read_to_string(&file)
                .map_err(|e| InputError(format!("cannot read {}: {e}", file.display())))?;
            let problem = Problem::new(parse_dimacs(&text)?);
            let device = if fit {
                problem.fitted_device(cfg.device)
            } else {
                cfg.device
            };
            let result = run_problem(&problem, &device, &cfg.solver)?;
            let mut json = result.to_json();
            json.push('\n');
            emit(&json, report.as_deref())?;
            Ok(if result.is_sat() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Bench {
            suite,
            runs,
            iters,
            csv,
            seed,
            config,
        } => {
            let cfg = load_config(config.as_deref())?;
            let seed = resolve_seed(seed, cfg.solver.seed)?;
            let base = BenchSuite::by_name(&suite)
                .ok_or_else(|| InputError(format!("unknown suite {suite:?} (available: paper)")))?;
            if runs == 0 || iters == 0 {
                return Err(InputError("--runs and --iters must be at least 1".into()));
            }
            let suite = BenchSuite {
                runs,
                iters,
                ..base
            };
            let report = run_suite(&suite, &cfg.device, &cfg.solver, seed)?;
            emit(&report.to_csv(), csv.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Kernels {
            trials,
            csv,
            seed,
            config,
        } => {
            let cfg = load_config(config.as_deref())?;
            let seed = resolve_seed(seed, cfg.solver.seed)?;
            if trials == 0 {
                return Err(InputError("--trials must be at least 1".into()));
            }
            let rows = kernel_energy_report(&cfg.device, trials, seed)?;
            emit(&kernels_csv(&rows), csv.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen {
            vars,
            clauses,
            seed,
        } => {
            let seed = resolve_seed(seed, 0)?;
            let cnf = random_3sat(vars, clauses, seed)?;
            print!("{}", cnf.to_dimacs());
            Ok(ExitCode::SUCCESS)
        }
    }
}
