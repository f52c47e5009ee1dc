//! `ebmeta`: check, prove, simulate and decompose `.ebm` models.
//!
//! Every command prints one JSON report on stdout and a short summary on
//! stderr (`--format text` prints only the summary, on stdout).
//!
//! Exit codes: 0 success, 1 unusable input (parse, name or usage errors),
//! 2 violations (static rules, failed obligations, rejected or non-equivalent
//! splits, rejected swaps), 3 runtime warnings or rejected steps during
//! simulation.

mod commands;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ebmeta_core::surface::{CompileOptions, DEFAULT_CELL_BUDGET};

use commands::{SimulationMode, Target};
use report::{ErrorInfo, Input, Outcome, Report, EXIT_ERROR};

const BUDGET_VAR: &str = "EBMETA_CELL_BUDGET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "ebmeta", version, about = "Finite-domain checker and simulator for Event-B style machines")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the static visibility rules.
    Check { file: PathBuf },

    /// Discharge invariant-preservation obligations by enumeration.
    Po {
        file: PathBuf,
        #[arg(long)]
        machine: Option<String>,
        #[arg(long, requires = "machine")]
        event: Option<String>,
    },

    /// Run a seeded random walk or a script from the init blocks.
    Simulate {
        file: PathBuf,
        #[arg(long, required_unless_present = "script", conflicts_with = "script")]
        steps: Option<usize>,
        #[arg(long, default_value_t = 0, conflicts_with = "script")]
        seed: u64,
        /// One `Machine event [parameter-formula]` per line.
        #[arg(long)]
        script: Option<PathBuf>,
    },

    /// Split a machine along a named plan and check the result.
    Split {
        file: PathBuf,
        #[arg(long)]
        machine: String,
        #[arg(long)]
        plan: String,
        /// Write the submachines as `.ebm` text to this path.
        #[arg(long)]
        emit: Option<PathBuf>,
    },

    /// Check that retiring and activating machines keeps the global state.
    SwapCheck {
        file: PathBuf,
        #[arg(long)]
        retire: Vec<String>,
        /// `NAME` (state from its init block) or `NAME:formula`.
        #[arg(long)]
        activate: Vec<String>,
    },

    /// List the finest conjuncts of an invariant, guard, action or init state.
    Conjuncts {
        file: PathBuf,
        #[arg(long)]
        machine: String,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, required_if_eq_any([("target", "guard"), ("target", "action")]))]
        event: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Po { .. } => "po",
            Command::Simulate { .. } => "simulate",
            Command::Split { .. } => "split",
            Command::SwapCheck { .. } => "swap-check",
            Command::Conjuncts { .. } => "conjuncts",
        }
    }

    fn file(&self) -> &Path {
        match self {
            Command::Check { file }
            | Command::Po { file, .. }
            | Command::Simulate { file, .. }
            | Command::Split { file, .. }
            | Command::SwapCheck { file, .. }
            | Command::Conjuncts { file, .. } => file,
        }
    }
}

fn cell_budget() -> Result<u64, ErrorInfo> {
    match std::env::var(BUDGET_VAR) {
        Err(_) => Ok(DEFAULT_CELL_BUDGET),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| ErrorInfo::new("Usage", format!("{BUDGET_VAR} must be a non-negative integer, got `{v}`"))),
    }
}

fn read_text(path: &Path) -> Result<String, ErrorInfo> {
    std::fs::read_to_string(path).map_err(|e| ErrorInfo::new("IoError", format!("{}: {e}", path.display())))
}

fn run(command: &Command, bytes: Option<&[u8]>) -> Outcome {
    let text = match bytes.map(std::str::from_utf8) {
        Some(Ok(t)) => t,
        Some(Err(_)) => return Outcome::error(ErrorInfo::new("IoError", "input is not UTF-8")),
        None => {
            return Outcome::error(ErrorInfo::new(
                "IoError",
                format!("{}: cannot read file", command.file().display()),
            ))
        }
    };
    let options = match cell_budget() {
        Ok(cell_budget) => CompileOptions { cell_budget },
        Err(e) => return Outcome::error(e),
    };
    match command {
        Command::Check { .. } => commands::check(text, options),
        Command::Po { machine, event, .. } => commands::po(text, options, machine.as_deref(), event.as_deref()),
        Command::Simulate {
            steps, seed, script, ..
        } => match script {
            Some(path) => match read_text(path) {
                Ok(s) => commands::simulate(text, options, SimulationMode::Script(&s)),
                Err(e) => Outcome::error(e),
            },
            None => commands::simulate(
                text,
                options,
                SimulationMode::Random {
                    seed: *seed,
                    steps: steps.unwrap_or(0),
                },
            ),
        },
        Command::Split {
            machine, plan, emit, ..
        } => commands::split(text, options, machine, plan, emit.as_deref()),
        Command::SwapCheck { retire, activate, .. } => commands::swap_check(text, options, retire, activate),
        Command::Conjuncts {
            machine, target, event, ..
        } => commands::conjuncts(text, options, machine, *target, event.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    let bytes = std::fs::read(cli.command.file()).ok();
    let outcome = run(&cli.command, bytes.as_deref());
    let report = Report::new(cli.command.name(), Input::of(bytes.as_deref()), &outcome);

    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let summary = outcome.summary.join("\n");
    match cli.format {
        Format::Json => {
            let json = serde_json::to_string_pretty(&report).expect("reports serialize");
            let _ = writeln!(out, "{json}");
            if !summary.is_empty() {
                let _ = writeln!(err, "{summary}");
            }
        }
        Format::Text => {
            let _ = writeln!(out, "{} {}: {}", report.tool, report.command, report.status.as_str());
            if !summary.is_empty() {
                let _ = writeln!(out, "{summary}");
            }
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
