//! `wpca` command-line tool.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ConfigFile;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "wpca",
    version,
    about = "Winsorized PCA: subspace fits, principal angles, robustness bounds and simulation presets"
)]
pub struct Cli {
    /// Random seed [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file, `-` for stdout (default: $WPCA_OUTPUT_DIR/<name> or stdout)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// key = value config file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a winsorized PC subspace to a CSV data matrix
    Fit(FitArgs),
    /// Principal angles between two basis CSV files
    Angles(AnglesArgs),
    /// Evaluate closed-form bounds
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Run a preset simulation (fig1, fig2, fig3, fig4)
    Experiment(ExperimentArgs),
    /// Draw a (optionally contaminated) dataset with diagonal covariance
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub input: PathBuf,
    /// Subspace dimension [default: 1]
    #[arg(long)]
    pub d: Option<usize>,
    /// none | spherical | median | fixed:<r> | power:<beta> [default: median]
    #[arg(long)]
    pub radius: Option<String>,
    /// Subtract column means before fitting
    #[arg(long)]
    pub center: bool,
}

#[derive(Debug, Args)]
pub struct AnglesArgs {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum BoundsCommand {
    /// Perturbation bounds between pure and contaminated WPCA subspaces
    Perturbation {
        /// Winsorized eigen-gap; shorthand for --lam-d <gap> --lam-d1 0
        #[arg(long, conflicts_with_all = ["lam_d", "lam_d1"])]
        gap: Option<f64>,
        #[arg(long, requires = "lam_d1")]
        lam_d: Option<f64>,
        #[arg(long, requires = "lam_d")]
        lam_d1: Option<f64>,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Weak and strong breakdown lower bounds of WPCA
    Breakdown {
        /// Winsorized sample eigenvalues, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        eigs: Vec<f64>,
        #[arg(long, conflicts_with = "r2")]
        r: Option<f64>,
        /// Squared radius
        #[arg(long)]
        r2: Option<f64>,
        #[arg(long)]
        d: usize,
    },
    /// Breakdown points of classical PCA
    PcaBreakdown {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
    },
    /// Concentration bound on E[sin Θ] against the population subspace
    Concentration {
        #[arg(long)]
        lam1: f64,
        #[arg(long)]
        lamp: f64,
        /// Population winsorized eigenvalues, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        eigs: Vec<f64>,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: usize,
        /// Dimension (default: number of eigenvalues)
        #[arg(long)]
        p: Option<usize>,
        /// Subgaussian parameter; selects the subgaussian bound
        #[arg(long)]
        sigma_sub: Option<f64>,
    },
    /// Asymptotic rate shapes for r = p^(1/2 + beta), unit constants
    Rate {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        subgaussian: bool,
    },
    /// Deviation bound for the winsorized covariance
    Covariance {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        sigma_r: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
    },
    /// Subgaussian parameter of the winsorized vector
    SubgaussianParam {
        #[arg(long)]
        lam1: f64,
        #[arg(long)]
        lamp: f64,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        r: f64,
        /// Subgaussian parameter of the raw law (default +inf)
        #[arg(long)]
        sigma_sub: Option<f64>,
    },
    /// Monte Carlo population winsorized eigenvalues
    WinsorizedEigs {
        /// Diagonal of Σ, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        sigma: Vec<f64>,
        /// gaussian | t<nu>
        #[arg(long, default_value = "gaussian")]
        distribution: String,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// fig1 | fig2 | fig3 | fig4
    pub preset: String,
    /// Size multiplier [default: 1, fig2: 0.2]
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Number of rows
    #[arg(long)]
    pub n: Option<usize>,
    /// Diagonal of Σ, comma separated
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// gaussian | t<nu> [default: gaussian]
    #[arg(long)]
    pub distribution: Option<String>,
    /// Replace the first m rows by a spike
    #[arg(long, default_value_t = 0)]
    pub outliers: usize,
    /// 0-based coordinate of the spike
    #[arg(long, default_value_t = 0)]
    pub spike_index: usize,
    /// Spike value
    #[arg(long, default_value_t = 0.0)]
    pub spike: f64,
}

/// Settings shared by every command after merging flags with the config file.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub config: ConfigFile,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let ctx = Context {
        seed: match cli.seed {
            Some(s) => s,
            None => config.get("global", "seed")?.unwrap_or(42),
        },
        jobs: match cli.jobs {
            Some(j) => Some(j),
            None => config.get("global", "jobs")?,
        },
        out: cli.out.or(config.get::<PathBuf>("global", "out")?),
        config,
    };
    if let Some(jobs) = ctx.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Internal(format!("cannot start worker pool: {e}")))?;
    }
    match cli.command {
        Command::Fit(args) => commands::fit(&ctx, args),
        Command::Angles(args) => commands::angles(&ctx, args),
        Command::Bounds(cmd) => commands::bounds(&ctx, cmd),
        Command::Experiment(args) => commands::experiment(&ctx, args),
        Command::Sample(args) => commands::sample(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wpca: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
