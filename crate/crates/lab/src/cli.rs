//! Argument parsing. Precedence: defaults, then `--config`, then `--set`,
//! then the named flags.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dsbm_core::smoothing::SmootherKind;

use crate::commands::{cmd_cluster, cmd_generate, cmd_rates, cmd_sweep, cmd_verify};
use crate::commands::{ClusterRequest, VerifyRequest, VerifyTarget};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

#[derive(Debug, Parser)]
#[command(name = "dsbm-lab", version, about = "Spectral clustering experiments on dynamic stochastic block models")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Configuration file of `key=value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Any configuration key, as `KEY=VALUE`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub sets: Vec<String>,
}

/// Named shortcuts for the most common configuration keys.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    #[arg(long, value_parser = ["deterministic", "markov"])]
    pub mode: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, short = 'k')]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub alpha_scale: Option<f64>,
    #[arg(long, value_parser = ["log", "inverse"])]
    pub alpha_law: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, short = 'T')]
    pub horizon: Option<usize>,
    /// Comma-separated forgetting factors.
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Comma-separated window lengths.
    #[arg(long)]
    pub windows: Option<String>,
    #[arg(long, value_parser = ["adjacency", "laplacian", "both"])]
    pub matrix: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
}

impl Overrides {
    fn assignments(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut push = |k: &'static str, x: Option<String>| {
            if let Some(x) = x {
                v.push((k, x));
            }
        };
        push("mode", self.mode.clone());
        push("n", self.n.map(|x| x.to_string()));
        push("k", self.k.map(|x| x.to_string()));
        push("alpha_scale", self.alpha_scale.map(|x| x.to_string()));
        push("alpha_law", self.alpha_law.clone());
        // After the scale, which would otherwise clear it.
        push("alpha", self.alpha.map(|x| x.to_string()));
        push("epsilon", self.epsilon.map(|x| x.to_string()));
        push("tau", self.tau.map(|x| x.to_string()));
        push("horizon", self.horizon.map(|x| x.to_string()));
        push("lambdas", self.lambdas.clone());
        push("windows", self.windows.clone());
        push("matrix", self.matrix.clone());
        push("trials", self.trials.map(|x| x.to_string()));
        v
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VerifyWhich {
    Weights,
    LaplacianIneq,
    Degrees,
    Bias,
    Rates,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one sequence and write it to the output directory.
    Generate {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Cluster the last step of a persisted or freshly drawn sequence.
    Cluster {
        /// Sequence directory written by `generate`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Exponential forgetting factor.
        #[arg(long, conflicts_with = "window")]
        lambda: Option<f64>,
        /// Uniform window length.
        #[arg(long)]
        window: Option<usize>,
        /// Write one row of labels per matrix kind.
        #[arg(long)]
        labels_out: Option<PathBuf>,
        /// Write the metrics in the sweep CSV format.
        #[arg(long)]
        metrics_out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Monte Carlo sweep over the smoother grid.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check an inequality or rate; exits with 2 on a failed hard check.
    Verify {
        #[arg(value_enum)]
        which: VerifyWhich,
        /// Instances for `laplacian-ineq`.
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        /// Matrix size for `laplacian-ineq`.
        #[arg(long, default_value_t = 30)]
        size: usize,
        /// Restrict `weights` to one forgetting factor.
        #[arg(long, conflicts_with = "window")]
        lambda: Option<f64>,
        /// Restrict `weights` to one window.
        #[arg(long)]
        window: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the rate card and tuning profile of the configuration.
    Rates {
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

impl Command {
    fn overrides(&self) -> &Overrides {
        match self {
            Command::Generate { overrides }
            | Command::Cluster { overrides, .. }
            | Command::Sweep { overrides }
            | Command::Verify { overrides, .. }
            | Command::Rates { overrides, .. } => overrides,
        }
    }
}

pub fn resolve_config(global: &GlobalArgs, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match &global.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_overrides(&global.sets)?;
    for (k, v) in overrides.assignments() {
        cfg.set(k, &v, 0)?;
    }
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &global.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn smoother_arg(lambda: Option<f64>, window: Option<usize>) -> Option<SmootherKind> {
    match (lambda, window) {
        (Some(lambda), _) => Some(SmootherKind::Exponential { lambda }),
        (None, Some(window)) => Some(SmootherKind::Uniform { window }),
        (None, None) => None,
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(&cli.global, cli.command.overrides())?;
    match &cli.command {
        Command::Generate { .. } => cmd_generate(&cfg, out),
        Command::Cluster { input, lambda, window, labels_out, metrics_out, .. } => {
            let req = ClusterRequest {
                input: input.as_deref(),
                smoother: smoother_arg(*lambda, *window),
                labels_out: labels_out.as_deref(),
                metrics_out: metrics_out.as_deref(),
            };
            cmd_cluster(&cfg, &req, out).map(|_| ())
        }
        Command::Sweep { .. } => cmd_sweep(&cfg, out),
        Command::Verify { which, instances, size, lambda, window, .. } => {
            let target = match which {
                VerifyWhich::Weights => VerifyTarget::Weights,
                VerifyWhich::LaplacianIneq => VerifyTarget::LaplacianIneq,
                VerifyWhich::Degrees => VerifyTarget::Degrees,
                VerifyWhich::Bias => VerifyTarget::Bias,
                VerifyWhich::Rates => VerifyTarget::Rates,
            };
            if *instances == 0 || *size == 0 {
                return Err(LabError::Usage("instances and size must be positive".into()));
            }
            let req =
                VerifyRequest { target, instances: *instances, size: *size, smoother: smoother_arg(*lambda, *window) };
            cmd_verify(&cfg, &req, out).map(|_| ())
        }
        Command::Rates { csv, .. } => cmd_rates(&cfg, *csv, out),
    }
}
