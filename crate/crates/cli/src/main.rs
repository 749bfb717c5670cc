//! `galvanic`: sounding waveforms, synthetic sessions, tissue solves, channel
//! estimates and reports for galvanic-coupled intrabody links.

mod commands;
mod config;
mod plots;
mod units;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use commands::{generate, report, simulate, solve, sound};

#[derive(Parser, Debug)]
#[command(name = "galvanic", version, about, long_about = None)]
struct Cli {
    /// TOML file with one table per subcommand ([generate], [simulate], ...);
    /// flags override its values, which override the built-in defaults
    /// [default: none]
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More progress output; repeat for more [default: off]
    #[arg(long, global = true, action = ArgAction::Count)]
    verbose: u8,
    /// Print errors and warnings only [default: off]
    #[arg(long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a zero-padded bipolar m-sequence waveform for a signal generator.
    Generate(generate::Args),
    /// Pass a sounding waveform through a high-pass channel model and write a
    /// synthetic capture session.
    Simulate(simulate::Args),
    /// Solve the layered-arm tissue model and write the gain sweep.
    Solve(solve::Args),
    /// Estimate impulse and frequency response from a capture session.
    Sound(sound::Args),
    /// Summarize report and curve files written by the other subcommands.
    Report(report::Args),
}

/// Where progress text goes.
#[derive(Debug, Clone, Copy)]
pub struct Console {
    pub verbosity: i8,
}

impl Console {
    pub fn info(&self, msg: impl AsRef<str>) {
        if self.verbosity >= 0 {
            println!("{}", msg.as_ref());
        }
    }

    pub fn detail(&self, msg: impl AsRef<str>) {
        if self.verbosity >= 1 {
            println!("{}", msg.as_ref());
        }
    }

    /// Never changes the exit status.
    pub fn warn(&self, msg: impl AsRef<str>) {
        eprintln!("warning: {}", msg.as_ref());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let console = Console {
        verbosity: if cli.quiet { -1 } else { cli.verbose.min(i8::MAX as u8) as i8 },
    };
    let config = cli.config.as_deref();
    let result = match cli.command {
        Command::Generate(a) => generate::run(a, config, console),
        Command::Simulate(a) => simulate::run(a, config, console),
        Command::Solve(a) => solve::run(a, config, console),
        Command::Sound(a) => sound::run(a, config, console),
        Command::Report(a) => report::run(a, config, console),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
