//! Command-line front end for the psqsim simulator.

pub mod commands;
pub mod config;
pub mod exit;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use psqsim::dcim::GateFault;

use crate::commands::SweepAxis;
use crate::config::{ExperimentConfig, Overrides, CONFIG_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "psqsim", version, about = "Partial-sum quantization CiM simulator")]
pub struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory searched for configuration files.
    #[arg(long, global = true, env = CONFIG_DIR_ENV)]
    pub config_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Hardware mode: hcim_ternary, hcim_binary or adc<bits>. Repeatable.
    #[arg(long = "mode", global = true)]
    pub modes: Vec<String>,
    /// Inject this partial-sum sparsity instead of measuring it.
    #[arg(long, global = true)]
    pub sparsity: Option<f64>,
    /// 128x128 or 64x64.
    #[arg(long, global = true)]
    pub crossbar: Option<String>,
    /// cifar or imagenet.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Corrupt one gate equation, for exercising the checks.
    #[arg(long, global = true, hide = true)]
    pub inject_fault: Option<FaultArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FaultArg {
    AddCarry,
    SubBorrow,
}

impl From<FaultArg> for GateFault {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::AddCarry => GateFault::AddCarryTerm,
            FaultArg::SubBorrow => GateFault::SubBorrowTerm,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the digital CiM gates and word-level arithmetic.
    Selftest,
    /// Run a toy network through the bit-level hardware path and compare it
    /// against the integer reference.
    Verify,
    /// Energy, latency and area per workload and hardware mode.
    Estimate {
        /// Workload name or TOML path. Repeatable; all bundled by default.
        #[arg(long = "workload")]
        workloads: Vec<String>,
        /// Re-read each CSV and check that per-layer rows sum to the totals.
        #[arg(long)]
        check_totals: bool,
    },
    /// Vary one parameter and report its effect.
    Sweep {
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Comma-separated points; the configured ones by default.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Option<Vec<f64>>,
        #[arg(long = "workload")]
        workloads: Vec<String>,
    },
}

impl Cli {
    pub fn experiment_config(&self) -> anyhow::Result<ExperimentConfig> {
        let workloads = match &self.command {
            Command::Estimate { workloads, .. } | Command::Sweep { workloads, .. } => workloads.clone(),
            _ => Vec::new(),
        };
        let ov = Overrides {
            seed: self.seed,
            out: self.out.clone(),
            modes: self.modes.clone(),
            sparsity: self.sparsity,
            crossbar: self.crossbar.clone(),
            profile: self.profile.clone(),
            workloads,
        };
        match config::locate(self.config.as_deref(), self.config_dir.as_deref())? {
            Some(path) => {
                let file = config::read_file(&path)?;
                let base = path.parent().map(PathBuf::from).unwrap_or_default();
                ExperimentConfig::resolve(file, &base, ov)
            }
            None => ExperimentConfig::from_overrides(ov),
        }
    }
}

/// Run the parsed command; returns text for standard output.
pub fn run(cli: &Cli) -> anyhow::Result<String> {
    let fault = cli.inject_fault.map(GateFault::from);
    let cfg = cli.experiment_config()?;
    match &cli.command {
        Command::Selftest => Ok(commands::cmd_selftest(fault, cfg.seed)?.summary()),
        Command::Verify => Ok(commands::cmd_verify(&cfg, fault)?.summary),
        Command::Estimate { check_totals, .. } => Ok(commands::cmd_estimate(&cfg, *check_totals)?.summary),
        Command::Sweep { axis, values, .. } => Ok(commands::cmd_sweep(&cfg, *axis, values.as_deref())?.summary),
    }
}
