//! `langevin-kl`: KL privacy bounds and estimates for noisy gradient descent
//! on ReLU networks.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{read_config_file, Command, RunConfig};
use error::CliError;
use output::write_report;

macro_rules! setting_flags {
    ($($field:ident => $help:literal,)*) => {
        /// Settings shared by every command. Flags override `--config`.
        #[derive(Args, Debug, Clone, Default)]
        struct Flags {
            /// Flat key=value file, or an earlier output file to replay.
            #[arg(long, value_name = "PATH")]
            config: Option<PathBuf>,
            $(
                #[doc = $help]
                #[arg(long, allow_hyphen_values = true)]
                $field: Option<String>,
            )*
        }

        impl Flags {
            fn pairs(&self) -> Vec<(String, String)> {
                let mut pairs = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        pairs.push((stringify!($field).to_string(), v.clone()));
                    }
                )*
                pairs
            }
        }
    };
}

setting_flags! {
    data => "Data source: synth:<n> or csv:<path> [default: synth:64]",
    d => "Input dimension [default: 16, or the CSV column count]",
    width => "Hidden width; a comma list gives per-layer widths (a grid for sweep) [default: 64]",
    depth => "Number of weight matrices; a comma list is a grid for sweep [default: 3]",
    outputs => "Output dimension; 1 uses the logistic loss, more use cross-entropy [default: 1]",
    scheme => "lecun, he, ntk, xavier, custom:<b1>:<b2>:..., a comma list, or all [default: lecun]",
    model => "dnn or linearized [default: dnn]",
    metric => "Sweep columns: analytic, empirical or both [default: analytic]",
    eta => "Step size [default: 0.01]",
    steps => "Number of full-batch steps [default: 100]",
    sigma2 => "Noise variance [default: 0.01]",
    trajectory_sigma2 => "Noise variance driving the trajectory, when it should differ from sigma2",
    runs => "Independent training runs [default: 6]",
    seed => "Base random seed [default: 0]",
    neighbor => "Neighboring notion: replace, remove or add [default: remove]",
    pool => "Held-out candidate records for add and replace [default: 8]",
    cap => "Maximum number of replace neighbors [default: 256]",
    record_every => "Report cumulative KL every this many steps [default: 1]",
    kl_constant => "paper (divide by 2 sigma2) or exact (divide by 4 sigma2) [default: paper]",
    labels => "Synthetic labels: sign, teacher or class [default: teacher, or class for outputs > 1]",
    label_column => "Label column of CSV data [default: label]",
    normalize => "CSV row scaling: none, cap or exact [default: cap]",
    samples => "Monte Carlo initializations [default: 4000]",
    input_norm_sq => "Squared norm of the Monte Carlo probe input [default: d]",
    time => "Continuous training time for bound [default: eta * steps]",
    c => "Smoothness offset of the drift bound",
    beta_smooth => "Smoothness slope of the drift bound",
    rank_mt => "Rank of the gradient subspace in the drift bound",
    e_delta0 => "Expected squared gradient difference at init [default: 4B/n^2]",
    e_grad0 => "Expected squared gradient norm at init [default: B]",
    epsilon => "KL budget for the trade-off schedule (needs lazy_r)",
    lazy_r => "Lazy-training distance for the trade-off schedule",
    ridge => "Ridge added to the Gram matrix in lazy [default: 0]",
    out => "Output CSV path; detail files are written next to it [default: stdout]",
}

#[derive(Parser, Debug)]
#[command(name = "langevin-kl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Analytic KL bounds for the linearized and the full network.
    Bound(Flags),
    /// Empirical worst-case KL between neighboring datasets.
    Estimate(Flags),
    /// Monte Carlo checks of the initialization moments.
    McVerify(Flags),
    /// Lazy-training distance, Gram spectrum and convergence check.
    Lazy(Flags),
    /// Grid over schemes, widths and depths.
    Sweep(Flags),
}

fn execute(command: Command, flags: &Flags) -> Result<u8, CliError> {
    let mut pairs = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => Vec::new(),
    };
    pairs.extend(flags.pairs());
    let mut cfg = RunConfig::resolve(command, &pairs)?;
    let report = match command {
        Command::Bound => commands::bound::run(&mut cfg)?,
        Command::Estimate => commands::estimate::run(&mut cfg)?,
        Command::McVerify => commands::mc_verify::run(&mut cfg)?,
        Command::Lazy => commands::lazy::run(&mut cfg)?,
        Command::Sweep => commands::sweep::run(&mut cfg)?,
    };
    write_report(&cfg, &report)?;
    Ok(report.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        CliCommand::Bound(f) => (Command::Bound, f),
        CliCommand::Estimate(f) => (Command::Estimate, f),
        CliCommand::McVerify(f) => (Command::McVerify, f),
        CliCommand::Lazy(f) => (Command::Lazy, f),
        CliCommand::Sweep(f) => (Command::Sweep, f),
    };
    match execute(command, flags) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
