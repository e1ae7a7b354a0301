mod config;
mod run;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "negdpp", version, about = "Layer-diverse DPP negative sampling for GCNs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write history, checkpoint and summary to a run directory.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// Run directory (default: runs/<timestamp>-seed<N>)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every per-node sampling record to samples.jsonl
        #[arg(long)]
        dump_samples: bool,
    },
    /// Build one node's candidate set and draw its samples in every layer.
    Sample {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        node: usize,
        /// Use trained weights instead of the seed's initial ones
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Write a synthetic dataset in the loader format.
    Synth(synth::SynthArgs),
    /// Run the reference checks against brute-force oracles.
    Verify {
        /// 1k draws instead of 200k for the k-DPP distribution check
        #[arg(long)]
        fast: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train {
            config,
            overrides,
            out,
            dump_samples,
        } => {
            let cfg = run::resolve(config.as_deref(), &overrides)?;
            run::train(&cfg, out, dump_samples)?;
        }
        Command::Sample {
            config,
            overrides,
            node,
            checkpoint,
        } => {
            let cfg = run::resolve(config.as_deref(), &overrides)?;
            run::sample(&cfg, node, checkpoint.as_deref(), &mut std::io::stdout().lock())?;
        }
        Command::Synth(args) => synth::run(&args)?,
        Command::Verify { fast, seed } => return Ok(run::verify(fast, seed)),
    }
    Ok(ExitCode::SUCCESS)
}
