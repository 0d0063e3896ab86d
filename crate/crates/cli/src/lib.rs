//! Command-line front end for the `pgm-core` toolkit.
//!
//! [`run`] executes one invocation in-process and returns what the binary
//! would print, which keeps the integration tests free of process plumbing.

pub mod commands;
pub mod error;
pub mod io;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::{EnsembleArgs, GenArgs, GenKind, SimulateArgs};
use error::{exit, CliError};
use report::{render_value, Format, RunReport};

#[derive(Debug, Parser)]
#[command(name = "pgm", version, about = "Pretty good measurement toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Structured)]
    pub format: Format,

    /// Write the report (or generated ensemble) here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Ensemble file.
    #[arg(long)]
    pub input: PathBuf,

    /// Relative eigenvalue cutoff defining supports.
    #[arg(long)]
    pub cutoff: Option<f64>,
}

impl InputArgs {
    fn ensemble(&self) -> EnsembleArgs {
        EnsembleArgs {
            input: self.input.clone(),
            cutoff: self.cutoff,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Confusion matrix by both routes, worst-case error and Gram spectrum.
    Pgm {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Evaluate every bound on the ensemble plus the copy budgets.
    Bounds {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        delta: Option<f64>,
        /// Claimed ε; reported next to the measured values.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Monte Carlo run of the two-stage protocol.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Skip stage-2 tests of a candidate already rejected in this trial.
        #[arg(long)]
        dedup: bool,
        /// Worker threads (does not affect results).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Copy counts from the closed-form budgets.
    Copies {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        gram_norm: Option<f64>,
    },
    /// Write a generated ensemble file.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// What one invocation produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::INPUT_ERROR
            } else {
                exit::OK
            };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    stdout: String::new(),
                    stderr: text,
                    code,
                }
            } else {
                Outcome {
                    stdout: text,
                    stderr: String::new(),
                    code,
                }
            };
        }
    };
    match execute(&cli) {
        Ok(o) => o,
        Err(e) => Outcome {
            stdout: String::new(),
            stderr: render_value(
                &json!({"error": {"kind": e.kind(), "message": e.to_string()}}),
                Format::Structured,
            ),
            code: e.exit_code(),
        },
    }
}

fn emit(cli: &Cli, report: &RunReport) -> Result<Outcome, CliError> {
    let text = report.render(cli.format);
    let stdout = match &cli.output {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            String::new()
        }
        None => text,
    };
    Ok(Outcome {
        stdout,
        stderr: String::new(),
        code: report.exit_code(),
    })
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Pgm { input } => emit(cli, &commands::cmd_pgm(&input.ensemble())?),
        Command::Bounds {
            input,
            delta,
            epsilon,
        } => emit(
            cli,
            &commands::cmd_bounds(&input.ensemble(), *delta, *epsilon)?,
        ),
        Command::Simulate {
            input,
            delta,
            epsilon,
            trials,
            seed,
            dedup,
            threads,
        } => {
            let args = SimulateArgs {
                ensemble: input.ensemble(),
                delta: *delta,
                epsilon: *epsilon,
                trials: *trials,
                seed: *seed,
                dedup: *dedup,
            };
            let report = match threads {
                Some(t) => {
                    if *t == 0 {
                        return Err(CliError::Usage("--threads must be positive".into()));
                    }
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(*t)
                        .build()
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    pool.install(|| commands::cmd_simulate(&args))?
                }
                None => commands::cmd_simulate(&args)?,
            };
            emit(cli, &report)
        }
        Command::Copies {
            n,
            epsilon,
            delta,
            gram_norm,
        } => emit(
            cli,
            &commands::cmd_copies(*n, *epsilon, *delta, *gram_norm)?,
        ),
        Command::Gen {
            kind,
            n,
            d,
            rank,
            c,
            seed,
        } => {
            let args = GenArgs {
                kind: *kind,
                d: *d,
                n: *n,
                rank: *rank,
                c: *c,
                seed: *seed,
            };
            let (report, text) = commands::cmd_gen(&args, cli.output.as_deref())?;
            // Without --output the ensemble itself goes to stdout.
            Ok(Outcome {
                stdout: if cli.output.is_some() {
                    report.render(cli.format)
                } else {
                    text
                },
                stderr: String::new(),
                code: report.exit_code(),
            })
        }
    }
}
