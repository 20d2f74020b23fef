use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neteffect::Mode;

#[derive(Debug, Parser)]
#[command(name = "neteffect", version, about = "Detect, estimate and exploit network effects in labeled graphs")]
pub struct Cli {
    /// Base seed for prior sampling, the test, walks and the generator.
    #[arg(long, global = true, env = "NETEFFECT_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker thread cap (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sampled chi-squared test for class dependence across edges.
    Test(TestArgs),
    /// Estimate the class compatibility matrix.
    Estimate(EstimateArgs),
    /// Classify every node by propagation from the priors.
    Classify(ClassifyArgs),
    /// Generate a synthetic labeled graph.
    Synth(SynthArgs),
    /// Print graph and label statistics as JSON.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Edge list, one `u v` pair per line.
    #[arg(long)]
    pub edges: PathBuf,
    /// `node<TAB>label` lines; unlisted nodes are unlabeled.
    #[arg(long)]
    pub labels: PathBuf,
    /// Fraction of labeled nodes used as priors.
    #[arg(long, default_value_t = 0.05, value_parser = unit_fraction)]
    pub prior_frac: f64,
    /// Sample the same fraction from every class.
    #[arg(long)]
    pub stratified: bool,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the run report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Sampling rounds averaged per class pair.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
    pub rounds: u32,
    /// Stop sampling once a contingency table holds this many counts.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u32).range(20..))]
    pub cap: u32,
    /// Significance level.
    #[arg(long, default_value_t = 0.05, value_parser = open_fraction)]
    pub alpha: f64,
    /// p-value table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    /// Steps per random walk.
    #[arg(long, default_value_t = 4, value_parser = positive)]
    pub walk_len: usize,
    /// Walks started from every node.
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub walk_trials: usize,
    /// Embedding rank.
    #[arg(long, default_value_t = 256, value_parser = positive)]
    pub rank: usize,
    /// Use the plain adjacency instead of the emphasis matrix.
    #[arg(long)]
    pub no_emphasis: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Nef,
    EdgeCount,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, value_enum, default_value_t = Estimator::Nef)]
    pub estimator: Estimator,
    /// Compatibility matrix (row-normalized) as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Neteffect,
    Hom,
    Ec,
    A,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Neteffect => Mode::NetEffect,
            ModeArg::Hom => Mode::NetEffectHom,
            ModeArg::Ec => Mode::NetEffectEc,
            ModeArg::A => Mode::NetEffectA,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Neteffect)]
    pub mode: ModeArg,
    /// Propagation scale as a fraction of 1 / rho(A).
    #[arg(long, default_value_t = 0.9, value_parser = open_fraction)]
    pub f_safety: f64,
    /// Stop once the L1 change between iterations is at most this.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub l1_threshold: f64,
    #[arg(long, default_value_t = 200, value_parser = positive)]
    pub max_iter: usize,
    /// Propagate the raw ridge estimate instead of its row-normalized form.
    #[arg(long)]
    pub raw_compatibility: bool,
    /// Predicted label per node as TSV.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Propagation matrix as `i j weight` triples.
    #[arg(long)]
    pub dump_emphasis: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["preset", "spec", "class_sizes"]))]
pub struct SynthArgs {
    /// Named preset.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["xophily", "weak", "no-gne", "random", "homophily", "bipartite"]))]
    pub preset: Option<String>,
    /// Generator spec as JSON; its seed is replaced by --seed.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Comma-separated class sizes.
    #[arg(long, value_delimiter = ',', requires = "h_mix")]
    pub class_sizes: Option<Vec<usize>>,
    /// Mixing matrix rows separated by `;`, entries by `,`.
    #[arg(long, value_parser = matrix_rows, requires = "class_sizes")]
    pub h_mix: Option<MixingRows>,
    /// Number of edges (with --class-sizes).
    #[arg(long, default_value_t = 10_000, value_parser = positive)]
    pub num_edges: usize,
    /// Fraction of uniformly random edges (with --class-sizes).
    #[arg(long, default_value_t = 0.0, value_parser = noise_fraction)]
    pub noise: f64,
    #[arg(long)]
    pub out_edges: PathBuf,
    #[arg(long)]
    pub out_labels: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("{s:?} is not a number"))
}

fn unit_fraction(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} not in (0, 1]"))
    }
}

fn open_fraction(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} not in (0, 1)"))
    }
}

fn noise_fraction(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} not in [0, 1)"))
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("{s:?} is not a positive integer")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingRows(pub Vec<Vec<f64>>);

fn matrix_rows(s: &str) -> Result<MixingRows, String> {
    s.split(';')
        .map(|row| row.split(',').map(parse_f64).collect())
        .collect::<Result<_, _>>()
        .map(MixingRows)
}
