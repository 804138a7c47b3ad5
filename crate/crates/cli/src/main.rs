//! `tandem-clear`: solve, evaluate, sweep, analyze, verify and simulate the
//! two-phase clearing model from the command line.

mod commands;
mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tandem_clearing::Error;

#[derive(Debug, Parser)]
#[command(name = "tandem-clear", version, about, after_help = config::CONFIG_HELP)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML run configuration (see CONFIG FILE below).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Job budget for the value table [default: 40; sweep: 22]
    #[arg(long, global = true, value_name = "N")]
    pub n_max: Option<usize>,
    /// Station chosen when both routings tie [default: 2]
    #[arg(long, global = true, value_name = "1|2", value_parser = clap::value_parser!(u8).range(1..=2))]
    pub tie_break: Option<u8>,
    /// Model parameters, overriding [model] in the config.
    #[arg(long, global = true, value_name = "mu0,mu1,mu2,h0,h1,h2", allow_hyphen_values = true)]
    pub params: Option<String>,
    /// Suppress informational output on stdout.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the optimality equations; writes values.csv and actions.csv.
    Solve,
    /// Evaluate a fixed policy against the optimum; writes eval.csv.
    Evaluate(commands::EvaluateArgs),
    /// Relative-error sweep over a parameter grid; writes rows.csv,
    /// aggregates.csv and worstcases.txt.
    Sweep,
    /// Routing structure and theorem certificates; writes structure.txt.
    Structure,
    /// Inequality checks, certificates and residuals; writes verify.txt and
    /// bounds.csv. Exits 2 on any failure.
    Verify(commands::VerifyArgs),
    /// Monte Carlo estimate of a policy's expected cost.
    Simulate(commands::SimulateArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), message: err.to_string() }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Failure(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "{m}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParam { .. }
            | Error::InvalidBudget { .. }
            | Error::InvalidTieTolerance(_)
            | Error::NotInStateSpace(_)
            | Error::NotDecisionState(_)
            | Error::UnknownPolicy(_)
            | Error::BadPolicySpec { .. }
            | Error::NoEpisodes => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tandem-clear: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = commands::Context::new(&cli.global)?;
    match cli.command {
        Command::Solve => commands::solve(&ctx),
        Command::Evaluate(a) => commands::evaluate(&ctx, &a),
        Command::Sweep => commands::sweep(&ctx),
        Command::Structure => commands::structure(&ctx),
        Command::Verify(a) => commands::verify(&ctx, &a),
        Command::Simulate(a) => commands::simulate(&ctx, &a),
    }
}
