//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "certmenu", version, about = "Revenue- and welfare-optimal certification menus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximately revenue-optimal menu via the discretized DP.
    SolveRevenue(SolveRevenueArgs),
    /// Welfare-optimal menu: at-cost DP over k levels, or the dense menu.
    SolveWelfare(SolveWelfareArgs),
    /// Buyer segmentation, revenue and welfare of a given menu.
    Evaluate(MenuArgs),
    /// Full certification game under a menu, with an equilibrium check.
    Simulate(SimulateArgs),
    /// Exhaustive search over a small quality and price grid.
    Oracle(OracleArgs),
    /// Runs every structural validator on an instance.
    Validate(ValidateArgs),
    /// Revenue and welfare gaps of simple menus across values of H.
    GapDemo(GapDemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Auto,
    Exhaustive,
    Binding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Revenue,
    Welfare,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Seed for the randomized consistency probes.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "CERTMENU_THREADS")]
    pub threads: Option<usize>,
    /// Absolute type tolerance for cutoff bisection.
    #[arg(long)]
    pub tol_root: Option<f64>,
    /// Absolute error target for quadrature.
    #[arg(long)]
    pub tol_quad: Option<f64>,
    /// Report zero wall times so identical runs give identical bytes.
    #[arg(long)]
    pub no_timing: bool,
}

/// Where the instance comes from: a zoo name with parameters, or a file.
#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Named instance, e.g. linear_uniform or piecewise_gap.
    #[arg(long, conflicts_with = "instance")]
    pub zoo: Option<String>,
    /// Zoo parameter as key=value, repeatable (e.g. --param H=7.389).
    #[arg(long = "param", value_name = "KEY=VALUE", requires = "zoo")]
    pub params: Vec<String>,
    /// JSON instance spec file.
    #[arg(long)]
    pub instance: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveRevenueArgs {
    #[command(flatten)]
    pub source: InstanceArgs,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Menu items, or `unlimited` for ceil(1/eps) items on a finer price grid.
    #[arg(long, default_value = "1")]
    pub k: String,
    #[arg(long, value_enum, default_value = "auto")]
    pub strategy: Strategy,
    /// Quantile atoms standing in for the type distribution.
    #[arg(long, default_value_t = 1000)]
    pub type_atoms: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SolveWelfareArgs {
    #[command(flatten)]
    pub source: InstanceArgs,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Use the dense at-cost menu with this many levels instead of the DP.
    #[arg(long)]
    pub dense: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct MenuArgs {
    #[command(flatten)]
    pub source: InstanceArgs,
    /// Menu as a JSON array of [quality, price] pairs, or a path to one.
    #[arg(long)]
    pub menu: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: InstanceArgs,
    #[arg(long)]
    pub menu: String,
    /// Probe types for the equilibrium check.
    #[arg(long, default_value_t = 200)]
    pub probes: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub source: InstanceArgs,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "revenue")]
    pub objective: ObjectiveArg,
    /// Quantile atoms standing in for the type distribution.
    #[arg(long, default_value_t = 20)]
    pub types: usize,
    /// Evenly spaced qualities in (0, q_max].
    #[arg(long, default_value_t = 6)]
    pub qualities: usize,
    /// Evenly spaced prices in [0, top value).
    #[arg(long, default_value_t = 8)]
    pub prices: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: InstanceArgs,
    /// Points per axis of the validation grid.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct GapDemoArgs {
    /// Comma-separated values of H.
    #[arg(long = "H", value_delimiter = ',', default_value = "7.389,54.598,403.43")]
    pub h: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Ratio between consecutive qualities of the rich menu.
    #[arg(long, default_value_t = 0.001)]
    pub ratio: f64,
    #[command(flatten)]
    pub common: Common,
}
