//! Thin command-line front end; all logic lives in the library harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spdde::harness::{
    run_adt_generate, run_adt_verify, run_certify, run_halanay, run_simulate,
    run_yosida_converge, CertKind, RunOptions,
};

#[derive(Parser)]
#[command(name = "spdde", version, about = "Switched stochastic partial differential delay equations: simulation and stability certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Master seed override (flag beats SPDDE_SEED beats config)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Trajectory-count override
    #[arg(long)]
    trajectories: Option<usize>,
    /// Worker count; must not affect results
    #[arg(long)]
    threads: Option<usize>,
}

impl CommonArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            config: self.config.clone(),
            seed: self.seed,
            out: self.out.clone(),
            trajectories: self.trajectories,
            threads: self.threads,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CertArg {
    Gasm,
    Gasp,
    Comparison,
    FixedIndex,
}

impl From<CertArg> for CertKind {
    fn from(value: CertArg) -> Self {
        match value {
            CertArg::Gasm => CertKind::Gasm,
            CertArg::Gasp => CertKind::Gasp,
            CertArg::Comparison => CertKind::Comparison,
            CertArg::FixedIndex => CertKind::FixedIndex,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ensemble and export trajectories and moment curves
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Strong-approximation gap over a ladder of Yosida parameters
    YosidaConverge {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run one stability certificate
    Certify {
        #[arg(value_enum)]
        kind: CertArg,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sharpest Halanay rate and the dwell-time threshold ln(mu)/lambda
    Halanay {
        #[arg(long, allow_negative_numbers = true)]
        a1: f64,
        #[arg(long, allow_negative_numbers = true)]
        a2: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 2.0)]
        mu: f64,
    },
    /// Average dwell-time tooling
    Adt {
        #[command(subcommand)]
        sub: AdtCommand,
    },
}

#[derive(Subcommand)]
enum AdtCommand {
    /// Check a serialized signal against a dwell-time budget
    Verify {
        /// Signal file (JSON)
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        tau_a: Option<f64>,
        #[arg(long)]
        chatter: Option<f64>,
    },
    /// Generate a signal satisfying a dwell-time budget
    Generate {
        #[arg(long)]
        tau_a: f64,
        #[arg(long)]
        chatter: f64,
        #[arg(long)]
        horizon: f64,
        /// Indices to switch among
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1])]
        indices: Vec<usize>,
        /// Snap switch instants to this grid step
        #[arg(long)]
        grid_step: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate { common } => run_simulate(&common.options()),
        Command::YosidaConverge { common } => run_yosida_converge(&common.options()),
        Command::Certify { kind, common } => run_certify((*kind).into(), &common.options()),
        Command::Halanay { a1, a2, tau, mu } => run_halanay(*a1, *a2, *tau, *mu),
        Command::Adt { sub } => match sub {
            AdtCommand::Verify {
                signal,
                tau_a,
                chatter,
            } => run_adt_verify(signal, *tau_a, *chatter),
            AdtCommand::Generate {
                tau_a,
                chatter,
                horizon,
                indices,
                grid_step,
                seed,
                out,
            } => run_adt_generate(indices, *tau_a, *chatter, *horizon, *grid_step, *seed, out),
        },
    };
    match outcome {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
