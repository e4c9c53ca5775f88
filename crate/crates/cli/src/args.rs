use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "trajeval",
    version,
    about = "Utility and privacy evaluation of synthetic trajectory data"
)]
pub struct Cli {
    /// Directory for every file a command writes.
    #[arg(
        long,
        global = true,
        env = "TRAJEVAL_OUT",
        default_value = "trajeval-out"
    )]
    pub out: PathBuf,

    /// Base seed; overrides the seed of a config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dataset descriptors, one row per dataset.
    Profile(ProfileArgs),
    /// Cell-size selection and grid stability sweeps.
    #[command(subcommand)]
    Grid(GridCommand),
    /// Utility vectors of synthetic datasets against a real one.
    Evaluate(EvaluateArgs),
    /// Privacy attacks against a generator.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Renders a score CSV or a report JSON as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// Dataset CSV; repeat for several rows.
    #[arg(long, required = true)]
    pub dataset: Vec<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum GridCommand {
    /// Picks the cell edge from the segment-length distribution.
    Select {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Evaluates grid-based metrics over cell sizes and phase shifts.
    Sweep {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        syn: PathBuf,
        /// TOML with `edges_m`, `offsets_per_axis`, `metrics` and `params`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Real dataset CSV.
    #[arg(long)]
    pub dataset: PathBuf,

    /// Synthetic dataset CSV; repeat for several models.
    #[arg(long, required = true)]
    pub syn: Vec<PathBuf>,

    /// Built-in metric selection.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,

    /// Metric selection TOML.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Directory with the constraint layers (GeoJSON).
    #[arg(long)]
    pub layers: Option<PathBuf>,

    /// Grid cell edge in meters; overrides the selection and the data-driven choice.
    #[arg(long)]
    pub cell_edge_m: Option<f64>,

    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,

    /// Exit successfully even when some metrics failed.
    #[arg(long)]
    pub allow_partial: bool,
}

#[derive(Args, Debug)]
pub struct GeneratorArgs {
    /// Generator as `kind[:key=value,...]`, e.g. `gaussian-jitter:sigma_m=50`.
    #[arg(long, conflicts_with = "generator")]
    pub model: Option<String>,

    /// Generator TOML (`kind = "...", ...`).
    #[arg(long)]
    pub generator: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Main,
    Masked,
    ReleasedOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    Frechet,
    Custom,
}

#[derive(Subcommand, Debug)]
pub enum AttackCommand {
    /// Membership inference against the generator's inference-time input.
    Mia(MiaArgs),
    /// Trajectory-user linking under the legacy and fixed protocols.
    Tul(TulArgs),
}

#[derive(Args, Debug)]
pub struct MiaArgs {
    /// Training set of the target model.
    #[arg(long)]
    pub dataset: PathBuf,

    /// Inference-time input of the target model (the members).
    #[arg(long)]
    pub target: PathBuf,

    /// Records never seen by the target model (the non-members).
    #[arg(long)]
    pub holdout: PathBuf,

    /// Attacker's auxiliary data; not allowed in the released-only scenario.
    #[arg(long)]
    pub aux: Option<PathBuf>,

    #[command(flatten)]
    pub generator: GeneratorArgs,

    /// Attack TOML (scenario, distance, keep_fraction, aux_fractions, n_seeds, ...).
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,

    #[arg(long)]
    pub keep_fraction: Option<f64>,

    #[arg(long, value_enum)]
    pub distance: Option<DistanceArg>,

    /// Number of repeated runs.
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TulArgs {
    /// Real training trajectories.
    #[arg(long)]
    pub dataset: PathBuf,

    /// Real test trajectories.
    #[arg(long)]
    pub target: PathBuf,

    #[command(flatten)]
    pub generator: GeneratorArgs,

    #[arg(long, value_enum, default_value = "frechet")]
    pub distance: DistanceArg,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Score CSV (`seed,set,score`) or report JSON.
    pub input: PathBuf,

    /// Restrict a score histogram to one seed.
    #[arg(long)]
    pub plot_seed: Option<u64>,
}
