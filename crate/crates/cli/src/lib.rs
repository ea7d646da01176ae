//! Command-line front end: `gen`, `run`, `eval` and `record`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

pub use commands::{cmd_eval, cmd_gen, cmd_record, cmd_run, EvalArgs, GenArgs, RunSummary};
pub use config::{
    RunArgs, RunConfig, ScorerBackend, ScorerConfig, SyntheticSource, SCORER_URL_ENV,
};

#[derive(Debug, Parser)]
#[command(name = "zsnav", version, about = "Zero-shot navigation harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic environment and its episodes.
    Gen(GenArgs),
    /// Run a policy over episodes and write trajectories and results.
    Run(RunArgs),
    /// Aggregate seen and unseen results into a report.
    Eval(EvalArgs),
    /// Run with a live scorer and save every score for replay.
    Record {
        #[command(flatten)]
        run: RunArgs,
        /// Score table destination.
        #[arg(long = "out")]
        out: PathBuf,
    },
}

fn env_url() -> Option<String> {
    std::env::var(SCORER_URL_ENV).ok().filter(|s| !s.is_empty())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(args) => {
            let generated = cmd_gen(args.seed, &args.params()?, &args.out)?;
            println!("{}", generated.environment.display());
            println!("{}", generated.episodes.display());
        }
        Command::Run(args) => {
            let summary = cmd_run(&args.resolve(env_url())?)?;
            println!(
                "{} of {} episodes succeeded",
                summary.successes, summary.episodes
            );
        }
        Command::Eval(args) => {
            cmd_eval(&args)?;
        }
        Command::Record { run, out } => {
            let table = cmd_record(&run.resolve(env_url())?, &out)?;
            println!("{} scores recorded", table.len());
        }
    }
    Ok(())
}
