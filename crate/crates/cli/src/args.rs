//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Format;

#[derive(Debug, Parser)]
#[command(
    name = "mixgraph",
    version,
    about = "Sparse graphical models for mixed continuous and discrete data",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Copula EM with a graphical lasso M-step.
    FitEm(FitEmArgs),
    /// One-step graphical lasso on a Kendall's tau correlation matrix.
    FitSkeptic(FitSkepticArgs),
    /// Draw a mixed dataset and its true graph.
    Simulate(SimulateArgs),
    /// Structure-recovery ROC comparison over repeated simulations.
    Roc(RocArgs),
    /// AIC/BIC model selection over a previous grid run.
    Select(SelectArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config file, or a manifest.json from an earlier run; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for every random stream (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated output formats.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub formats: Option<Vec<Format>>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Log progress and per-iteration diagnostics to stderr.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Data CSV with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// JSON schema listing column names and types.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Single penalty value.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// `autoN` (N log-spaced points from the data-driven maximum down to a tenth of it)
    /// or a comma-separated decreasing list.
    #[arg(long)]
    pub lambda_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct EmArgs {
    /// E-step variant.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Retained Gibbs sweeps per row and E-step.
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Discarded Gibbs sweeps per row and E-step.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// EM iterations per penalty.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// EM stops when no entry of Θ moves more than this.
    #[arg(long)]
    pub conv_tol: Option<f64>,
    /// Graphical lasso tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SkepticArgs {
    /// Sample Kendall's tau or tau implied by a fitted pair copula.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Candidate copula families (comma-separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub families: Option<Vec<FamilyArg>>,
    /// Refine tau-inverted parameters by maximum pseudo-likelihood.
    #[arg(long)]
    pub refine: bool,
    /// Disallow 90° rotations of Clayton and Gumbel.
    #[arg(long)]
    pub no_rotation: bool,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Block sizes: binary,ordinal,count,chisquare,normal.
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<usize>>,
    /// Probability that a cell is contaminated.
    #[arg(long)]
    pub outlier_rate: Option<f64>,
    /// `biased`: +5 w.p. 0.6 else −5; `uniform`: replaced w.p. 0.6 by ±5.
    #[arg(long, value_enum)]
    pub outlier_sign: Option<SignArg>,
    /// Contaminate only the normal block.
    #[arg(long)]
    pub outliers_normal_only: bool,
    /// Erdős–Rényi edge probability of the true graph.
    #[arg(long)]
    pub edge_prob: Option<f64>,
    /// Banded true graph with this bandwidth.
    #[arg(long)]
    pub bandwidth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitEmArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub em: EmArgs,
    /// Fit every grid point from Θ = I in parallel instead of warm-starting along the path.
    #[arg(long)]
    pub independent: bool,
    /// Write the expected latent correlation of the last M-step.
    #[arg(long)]
    pub dump_moments: bool,
    /// H term of the information criteria (with ic-tsv output).
    #[arg(long, value_enum)]
    pub h_mode: Option<HModeArg>,
}

#[derive(Debug, Args)]
pub struct FitSkepticArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub skeptic: SkepticArgs,
    /// Graphical lasso tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub design: DesignArgs,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub em: EmArgs,
    #[command(flatten)]
    pub skeptic: SkepticArgs,
    /// Methods to compare (comma-separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Option<Vec<MethodArg>>,
    /// Number of simulation repetitions.
    #[arg(long)]
    pub reps: Option<usize>,
    /// `autoN` or a comma-separated decreasing list.
    #[arg(long)]
    pub lambda_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory of a fit-em or fit-skeptic run with --lambda-grid and theta-csv output.
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
    #[arg(long, value_enum)]
    pub h_mode: Option<HModeArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    Full,
    Partitioned,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Sample,
    Copula,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyArg {
    Gaussian,
    Clayton,
    Gumbel,
    Frank,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum HModeArg {
    Omit,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CriterionArg {
    Aic,
    Bic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SignArg {
    Biased,
    Uniform,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    CopulaEm,
    CopulaTau,
    NpnTau,
    NpnScore,
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::FitEm(a) => &a.common,
            Command::FitSkeptic(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Roc(a) => &a.common,
            Command::Select(a) => &a.common,
        }
    }
}
