use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::domains::{DomainSpec, Family, ProblemSpec};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  internal error
  2  usage error
  3  invalid input (domain, boundary data, file format)
  4  domain has no tiling
  5  empty height-change fiber
  6  domain too large for exact enumeration
  7  numerical failure (solver, surface tension)
  8  I/O error";

#[derive(Debug, Parser)]
#[command(name = "domino", version, about = "Domino tilings of multiply-connected domains", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    #[command(flatten)]
    Experiment(Experiment),
    /// Reruns the experiment recorded in a manifest.
    Rerun(RerunArgs),
}

/// One experiment; this is what a manifest records.
#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Experiment {
    /// Builds a domain and writes its topology.
    Domain(DomainArgs),
    /// Enumerates all tilings and counts them by height change.
    Enumerate(EnumerateArgs),
    /// Samples uniform tilings with the flip and rotation chain.
    Sample(SampleArgs),
    /// Tabulates the surface tension over the Newton polygon.
    Tension(TensionArgs),
    /// Computes a limit shape.
    Solve(SolveArgs),
    /// Compares sampled mean heights with the limit shape across sizes.
    Compare(CompareArgs),
    /// Renders a sampled tiling and optional fields as SVG.
    Render(RenderArgs),
}

impl Experiment {
    pub fn common(&self) -> &Common {
        match self {
            Experiment::Domain(a) => &a.common,
            Experiment::Enumerate(a) => &a.common,
            Experiment::Sample(a) => &a.common,
            Experiment::Tension(a) => &a.common,
            Experiment::Solve(a) => &a.common,
            Experiment::Compare(a) => &a.common,
            Experiment::Render(a) => &a.common,
        }
    }

    pub fn common_mut(&mut self) -> &mut Common {
        match self {
            Experiment::Domain(a) => &mut a.common,
            Experiment::Enumerate(a) => &mut a.common,
            Experiment::Sample(a) => &mut a.common,
            Experiment::Tension(a) => &mut a.common,
            Experiment::Solve(a) => &mut a.common,
            Experiment::Compare(a) => &mut a.common,
            Experiment::Render(a) => &mut a.common,
        }
    }

    pub fn mode(&self) -> &'static str {
        match self {
            Experiment::Domain(_) => "domain",
            Experiment::Enumerate(_) => "enumerate",
            Experiment::Sample(_) => "sample",
            Experiment::Tension(_) => "tension",
            Experiment::Solve(_) => "solve",
            Experiment::Compare(_) => "compare",
            Experiment::Render(_) => "render",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct Common {
    /// Directory for artifacts and the manifest.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct DomainArgs {
    /// `aztec:N`, `modified-aztec:N[:DEFECT]`, `annulus:OUTER:INNER`,
    /// `rect:W:H` or a path to a domain JSON file.
    #[arg(long)]
    pub domain: DomainSpec,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub domain: DomainSpec,
    /// Largest number of squares to enumerate.
    #[arg(long, default_value_t = domino::enumerate::DEFAULT_CAP)]
    pub cap: usize,
    /// Also write every tiling with its height function.
    #[arg(long)]
    pub tilings: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub domain: DomainSpec,
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
    /// Proposals before the first sample; defaults to `N²·|squares|`.
    #[arg(long)]
    pub burnin: Option<u64>,
    /// Proposals between samples; defaults to `|squares|`.
    #[arg(long)]
    pub thin: Option<u64>,
    /// Restricts the chain to one height-change fiber.
    #[arg(long = "fix-R", visible_alias = "fix-r", value_delimiter = ',', allow_negative_numbers = true)]
    pub fix_r: Option<Vec<i64>>,
    /// Normalization of heights; defaults to the size of the domain.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Writes every k-th sampled tiling.
    #[arg(long)]
    pub snapshot_every: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct TensionArgs {
    /// Points per side of the grid over the Newton polygon.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    /// Built-in problem: `unit-square`, `aztec`,
    /// `annulus[:M[:west|north]]` or `modified-aztec`.
    #[arg(long, conflicts_with_all = ["domain", "boundary"], required_unless_present = "domain")]
    pub problem: Option<ProblemSpec>,
    /// Continuum domain JSON file.
    #[arg(long, requires = "boundary")]
    pub domain: Option<PathBuf>,
    /// Boundary data JSON file.
    #[arg(long, requires = "domain")]
    pub boundary: Option<PathBuf>,
    /// Pins the height changes instead of optimizing them.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub fix_r: Option<Vec<f64>>,
    /// Grid spacing of the mesh.
    #[arg(long, default_value_t = 0.05)]
    pub mesh: f64,
    #[arg(long, default_value_t = 400)]
    pub max_iterations: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[arg(long, default_value = "modified-aztec")]
    pub family: Family,
    #[arg(long, value_delimiter = ',', default_value = "8,16,24")]
    pub sizes: Vec<u32>,
    #[arg(long, default_value_t = 400)]
    pub samples: u64,
    /// Proposals before the first sample; defaults to `64·N²` sweeps.
    #[arg(long)]
    pub burnin: Option<u64>,
    /// Proposals between samples; defaults to `N²/4` sweeps.
    #[arg(long)]
    pub thin: Option<u64>,
    #[arg(long, default_value_t = 0.0625)]
    pub mesh: f64,
    /// Width of the excluded band around the frozen boundary.
    #[arg(long, default_value_t = 0.1)]
    pub band: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub domain: DomainSpec,
    /// Chain proposals from the maximal tiling; defaults to `N²·|squares|`.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Samples for a mean-height picture; none when zero.
    #[arg(long, default_value_t = 0)]
    pub mean_samples: u64,
    /// Also renders the limit shape of this problem.
    #[arg(long)]
    pub problem: Option<ProblemSpec>,
    #[arg(long, default_value_t = 0.05)]
    pub mesh: f64,
    /// Pixels per lattice unit.
    #[arg(long, default_value_t = 12.0)]
    pub pixels: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Overrides the recorded output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
