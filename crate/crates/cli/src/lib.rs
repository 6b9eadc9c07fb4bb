//! Library side of the `selenc` binary: config handling, parallel drivers
//! and writers. Floats in every output file carry 12 significant digits.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, Result, EXIT_ERROR, EXIT_OK, EXIT_PARTIAL};
pub use run::{Status, SweepKind};

#[derive(Debug, Parser)]
#[command(name = "selenc", version, about = "Age-optimal codeword lengths for selective encoding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal lengths for one operating point; writes codebook.json
    Solve(RunConfig),
    /// Age against k; writes sweep-k.csv
    SweepK(RunConfig),
    /// Randomized policy: age against alpha; writes sweep-alpha.csv
    SweepAlpha(RunConfig),
    /// Non-resetting empty symbol: age against its length; writes sweep-empty.csv
    SweepEmpty(RunConfig),
    /// Exhaustive search for the best k-subset to encode; writes select.csv
    Select(RunConfig),
    /// Monte Carlo estimate of the average age; writes simulation.json
    Simulate(RunConfig),
}

impl Command {
    pub fn execute(self) -> Result<Status> {
        match self {
            Command::Solve(c) => run::solve(&c.resolve()?),
            Command::SweepK(c) => run::sweep(&c.resolve()?, SweepKind::K),
            Command::SweepAlpha(c) => run::sweep(&c.resolve()?, SweepKind::Alpha),
            Command::SweepEmpty(c) => run::sweep(&c.resolve()?, SweepKind::EmptyLength),
            Command::Select(c) => run::select(&c.resolve()?),
            Command::Simulate(c) => run::simulate(&c.resolve()?),
        }
    }
}
