use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use lyapinfo::cli::{
    self, instance::load_problem, Outcome, Overrides, DEFAULT_SAMPLES, EXIT_INPUT,
};

/// Decide whether trajectory data plus prior knowledge determine the
/// solution of A P + P Aᵀ = -Q, and compute it from data when they do.
#[derive(Parser)]
#[command(name = "lyapinfo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Instance file (JSON).
    instance: PathBuf,
    #[arg(long = "tol-rank", allow_negative_numbers = true)]
    tol_rank: Option<f64>,
    #[arg(long = "tol-gap", allow_negative_numbers = true)]
    tol_gap: Option<f64>,
    #[arg(long = "tol-agree", allow_negative_numbers = true)]
    tol_agree: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            rank_tol: self.tol_rank,
            gap_tol: self.tol_gap,
            agree_tol: self.tol_agree,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide informativity; prints P* or a witness pair.
    Check {
        #[command(flatten)]
        common: Common,
        /// Oracle sample count used to find a witness.
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Compute P* from the consistent set.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Use the r×r reduced system (subspace_action priors only).
        #[arg(long)]
        reduced: bool,
    },
    /// Cross-check the checker against a sampling oracle.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Simulate a trajectory and write an inline dataset.
    Simulate {
        /// System spec: {A, x0, times} or an instance with a generator.
        spec: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn emit(outcome: Outcome, json: bool) -> ExitCode {
    let text = if json {
        format!("{}\n", outcome.report.to_json())
    } else {
        outcome.report.to_text()
    };
    // A closed pipe (e.g. `| head`) is not an error worth a panic.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    ExitCode::from(outcome.exit_code as u8)
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INPUT as u8)
}

fn run_instance(
    common: &Common,
    f: impl FnOnce(&cli::instance::Problem, &Overrides) -> Outcome,
) -> ExitCode {
    match load_problem(&common.instance) {
        Ok(problem) => emit(f(&problem, &common.overrides()), common.json),
        Err(e) => input_error(e),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would read as "not
    // informative"; usage errors are input errors here.
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT as u8),
            };
        }
    };
    match args.command {
        Command::Check { common, samples } => {
            run_instance(&common, |p, ov| cli::check(p, ov, samples))
        }
        Command::Solve { common, reduced } => {
            run_instance(&common, |p, ov| cli::solve(p, ov, reduced))
        }
        Command::Verify { common, samples } => {
            run_instance(&common, |p, ov| cli::verify(p, ov, samples))
        }
        Command::Simulate { spec, out } => {
            let text = match std::fs::read_to_string(&spec) {
                Ok(t) => t,
                Err(e) => return input_error(format!("{}: {e}", spec.display())),
            };
            let sim = match cli::simulate(&text) {
                Ok(s) => s,
                Err(e) => return input_error(e),
            };
            for w in &sim.warnings {
                eprintln!("warning: {w}");
            }
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, format!("{}\n", sim.json)) {
                        return input_error(format!("{}: {e}", path.display()));
                    }
                }
                None => {
                    let _ = writeln!(std::io::stdout().lock(), "{}", sim.json);
                }
            }
            ExitCode::SUCCESS
        }
    }
}
