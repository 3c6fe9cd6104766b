mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{inline_or_file, load_config_file, EstimatorArg, Format, RawConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "sensornet", version, about = "Bounds, optimal correlations and Bayesian errors for qubit sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Quantum Fisher information of a gamma-state or a sensor-symmetric probe.
    Qfi,
    /// Quantum Cramér–Rao bound for a set of linear functions.
    Crb,
    /// Optimal correlation strength against the geometry parameter.
    JoptSweep,
    /// Grid of the bound factor h(J, G) for one network size.
    Hmap,
    /// Normalisation, geometry parameter and angles of a function set.
    Geometry,
    /// Bayesian MSE against trial count, with the bound and mu_tau.
    MseCurve,
    /// Posterior density for one simulated record.
    PosteriorMap,
    /// Trials needed for the MSE to reach the bound within a threshold.
    MuTau,
    /// Checks that the local measurement saturates the QFI.
    VerifyPovm,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Qfi => "qfi",
            Command::Crb => "crb",
            Command::JoptSweep => "jopt-sweep",
            Command::Hmap => "hmap",
            Command::Geometry => "geometry",
            Command::MseCurve => "mse-curve",
            Command::PosteriorMap => "posterior-map",
            Command::MuTau => "mu-tau",
            Command::VerifyPovm => "verify-povm",
        }
    }
}

#[derive(Args)]
struct Flags {
    /// JSON settings file, or a previous output file to replay.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    gamma: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    v: Option<f64>,
    #[arg(long = "J", global = true, value_delimiter = ',', allow_negative_numbers = true)]
    j: Option<Vec<f64>>,
    #[arg(long = "G", global = true, value_delimiter = ',', allow_negative_numbers = true)]
    g: Option<Vec<f64>>,
    #[arg(long, global = true)]
    normalization: Option<f64>,
    /// Inline JSON or a path: {"V": [[...], ...], "a": [...], "weights": [...]}.
    #[arg(long, global = true)]
    functions: Option<String>,
    /// Inline JSON or a path: {"center": [...], "widths": [...]}.
    #[arg(long, global = true)]
    prior: Option<String>,
    #[arg(long, global = true, value_delimiter = ',')]
    mu_list: Option<Vec<u64>>,
    #[arg(long, global = true)]
    mu: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Option<Vec<f64>>,
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Falls back to SENSORNET_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true, value_enum)]
    estimator: Option<EstimatorArg>,
    #[arg(long, global = true)]
    points: Option<usize>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// JSON output of mse-curve to reuse in mu-tau.
    #[arg(long, global = true)]
    curve: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Defaults to json for a .json output path, csv otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    workers: Option<usize>,
}

impl Flags {
    fn into_raw(self) -> Result<(RawConfig, Option<PathBuf>, Option<PathBuf>), CliError> {
        let functions = self.functions.map(|s| inline_or_file("functions", &s)).transpose()?;
        let prior = self.prior.map(|s| inline_or_file("prior", &s)).transpose()?;
        let raw = RawConfig {
            command: None,
            gamma: self.gamma,
            d: self.d,
            v: self.v,
            j: self.j,
            g: self.g,
            normalization: self.normalization,
            functions,
            prior,
            mu_list: self.mu_list,
            mu: self.mu,
            theta: self.theta,
            mc_samples: self.mc_samples,
            resolution: self.resolution,
            seed: self.seed,
            threshold: self.threshold,
            estimator: self.estimator,
            points: self.points,
            tolerance: self.tolerance,
            curve: self.curve,
            workers: self.workers,
            format: self.format,
        };
        Ok((raw, self.config, self.out))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (flags, config_path, out) = cli.flags.into_raw()?;
    let mut raw = match config_path {
        Some(p) => flags.overlay(load_config_file(&p)?),
        None => flags,
    };
    if let Some(c) = raw.command.take() {
        if c != cli.command.name() {
            return Err(CliError::invalid(
                "config",
                format!("written for '{c}', not '{}'", cli.command.name()),
            ));
        }
    }
    let content = commands::run(cli.command, raw, out.as_deref())?;
    output::emit(out.as_deref(), &content)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sensornet: {e}");
            e.exit_code()
        }
    }
}
