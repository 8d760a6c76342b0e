use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use locreq::commands::{self, CommandError, Outcome, EXIT_USAGE};
use locreq::config::{parse_config, ProjectConfig};
use locreq::report::{render_report, Format};

/// Localization data requirements: derive budgets, check systems, validate by simulation.
#[derive(Debug, Parser)]
#[command(name = "locreq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derive the accuracy budget for the configured function.
    Derive(CommonArgs),
    /// Check every configured ILS against the function.
    Check(CommonArgs),
    /// Tabulate the accuracy budget over a grid of update gaps.
    Tabulate(CommonArgs),
    /// Run the Monte Carlo validation experiment.
    Simulate(SimArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Project configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output format.
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of trials.
    #[arg(long)]
    trials: Option<u64>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse::<Format>()
}

fn load(path: &PathBuf) -> Result<ProjectConfig, String> {
    let bytes = fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn execute(command: &Command) -> Result<(Outcome, &CommonArgs), String> {
    let err = |e: CommandError| e.to_string();
    match command {
        Command::Derive(a) => Ok((commands::cmd_derive(&load(&a.config)?).map_err(err)?, a)),
        Command::Check(a) => Ok((commands::cmd_check(&load(&a.config)?).map_err(err)?, a)),
        Command::Tabulate(a) => Ok((commands::cmd_tabulate(&load(&a.config)?).map_err(err)?, a)),
        Command::Simulate(s) => {
            let mut cfg = load(&s.common.config)?;
            commands::apply_overrides(&mut cfg, s.seed, s.trials).map_err(err)?;
            Ok((commands::cmd_simulate(&cfg).map_err(err)?, &s.common))
        }
    }
}

fn emit(bytes: &[u8], out: Option<&PathBuf>) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let (outcome, args) = match execute(&cli.command) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    for warning in &outcome.report.warnings {
        eprintln!("warning: {warning}");
    }
    let bytes = render_report(&outcome.report, args.format);
    if let Err(e) = emit(&bytes, args.out.as_ref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(EXIT_USAGE as u8);
    }
    ExitCode::from(outcome.exit_code as u8)
}
