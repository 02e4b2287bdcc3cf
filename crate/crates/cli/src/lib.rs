//! `dmk`: listing stratification, word vectors, popularity classification
//! and keyword-biased text generation from the command line.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for bad flags, bad
//! configuration or unusable input files.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use dmk_core::classifier::{ClassifierConfig, EnsembleMode, Recurrence};
use dmk_core::gan::{DeltaSpace, GanConfig};
use dmk_core::glove::{GloveConfig, Metric};

pub mod commands;
pub mod config;
pub mod io;

use config::{CorpusOptions, RunConfig, SweepOptions};

/// A problem with the user's flags, configuration or input files.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Parser)]
#[command(name = "dmk", version, about = "Listing popularity analysis and keyword-biased listing text generation")]
pub struct Cli {
    /// JSON run configuration; explicit flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Master seed for every random stream [default: config seed, else $DMK_SEED, else 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// More logging on standard error (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic listing corpus with class-specific marker words.
    Synth(SynthArgs),
    /// Parse listings, stratify by price per bedroom and label popularity.
    Ingest(IngestArgs),
    /// Train word vectors on listing descriptions.
    Glove(GloveArgs),
    /// Train the LSTM popularity classifier.
    Classify(ClassifyArgs),
    /// Train the generator and discriminator.
    Gan(GanArgs),
    /// Decode samples from a trained generator.
    Generate(GenerateArgs),
    /// Train one GAN per (gamma, seed) pair and count keywords in the output.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnsembleArg {
    MeanLogProb,
    MajorityVote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecurrenceArg {
    Relu,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeltaSpaceArg {
    Scaled,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Cosine,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Cosine => Metric::Cosine,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output CSV (listing fields, no labels).
    #[arg(long)]
    pub out: PathBuf,
    /// Number of listings.
    #[arg(long, default_value_t = CorpusOptions::default().synthetic_records)]
    pub records: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Listing CSV with id, description, price, bedrooms, bathrooms, zipcode, occupancy_rate.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Labelled CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON parse and stratification report.
    #[arg(long)]
    pub report: PathBuf,
    /// Price-per-bedroom bin width.
    #[arg(long, default_value_t = CorpusOptions::default().bin_width)]
    pub bin_width: f64,
}

#[derive(Debug, Args)]
pub struct GloveArgs {
    /// Listing CSV, labelled or not.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Embedding text file: one `word v1 .. vd` line per word, `<unk>` last.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Min-max scaling JSON.
    #[arg(long)]
    pub scaling: Option<PathBuf>,
    /// Optional `epoch,objective` CSV.
    #[arg(long)]
    pub objective: Option<PathBuf>,
    #[arg(long, default_value_t = GloveConfig::default().dim)]
    pub dim: usize,
    #[arg(long, default_value_t = GloveConfig::default().epochs)]
    pub epochs: usize,
    /// AdaGrad learning rate.
    #[arg(long, default_value_t = GloveConfig::default().lr)]
    pub lr: f64,
    /// Co-occurrence window on each side.
    #[arg(long, default_value_t = CorpusOptions::default().window)]
    pub window: usize,
    /// Words seen fewer times map to `<unk>`.
    #[arg(long, default_value_t = CorpusOptions::default().min_count)]
    pub min_count: usize,
    #[arg(long, default_value_t = GloveConfig::default().x_max)]
    pub x_max: f64,
    #[arg(long, default_value_t = GloveConfig::default().alpha)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Labelled CSV from `ingest`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Embedding text file, trained here or external.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// `epoch,train_loss,train_acc,test_acc` CSV output.
    #[arg(long)]
    pub metrics: PathBuf,
    /// Model checkpoint (JSON).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = ClassifierConfig::default().epochs)]
    pub epochs: usize,
    /// Predict from every step (on) or the final step only (off).
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub ensemble: Toggle,
    #[arg(long, value_enum, default_value_t = EnsembleArg::MeanLogProb)]
    pub ensemble_mode: EnsembleArg,
    /// Hidden state handed to the next step: through a ReLU, or unchanged.
    #[arg(long, value_enum, default_value_t = RecurrenceArg::Relu)]
    pub recurrence: RecurrenceArg,
    /// LSTM units.
    #[arg(long, default_value_t = ClassifierConfig::default().hidden)]
    pub hidden: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = ClassifierConfig::default().lr)]
    pub lr: f64,
    /// Tokens read per description.
    #[arg(long, default_value_t = ClassifierConfig::default().max_len)]
    pub max_len: usize,
    /// Weights start uniform in (-s, s).
    #[arg(long, default_value_t = ClassifierConfig::default().init_scale)]
    pub init_scale: f64,
    /// Fraction of listings used for training.
    #[arg(long, default_value_t = CorpusOptions::default().split_ratio)]
    pub split_ratio: f64,
}

/// Network and schedule options shared by `gan` and `sweep`.
#[derive(Debug, Args)]
pub struct GanOpts {
    /// Word slots per generated sequence.
    #[arg(long, default_value_t = GanConfig::default().seq_len)]
    pub seq_len: usize,
    #[arg(long, default_value_t = GanConfig::default().noise_dim)]
    pub noise_dim: usize,
    #[arg(long, default_value_t = GanConfig::default().gen_hidden)]
    pub gen_hidden: usize,
    #[arg(long, default_value_t = GanConfig::default().disc_hidden)]
    pub disc_hidden: usize,
    /// Discriminator steps per cycle.
    #[arg(long, default_value_t = GanConfig::default().disc_steps)]
    pub disc_steps: usize,
    /// Generator steps per cycle.
    #[arg(long, default_value_t = GanConfig::default().gen_steps)]
    pub gen_steps: usize,
    #[arg(long, default_value_t = GanConfig::default().cycles)]
    pub cycles: usize,
    /// Adam learning rate for both networks.
    #[arg(long, default_value_t = GanConfig::default().lr)]
    pub lr: f64,
    /// Clamp the generator's last layer instead of applying a sigmoid.
    #[arg(long)]
    pub paper_literal_generator: bool,
    /// Space of the keyword vectors in the attention term.
    #[arg(long, value_enum, default_value_t = DeltaSpaceArg::Raw)]
    pub delta_space: DeltaSpaceArg,
    /// Show the discriminator every listing, not only High ones.
    #[arg(long)]
    pub include_all_labels: bool,
}

#[derive(Debug, Args)]
pub struct GanArgs {
    /// Labelled CSV from `ingest`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Scaling JSON from `glove` [default: fitted to the embeddings].
    #[arg(long)]
    pub scaling: Option<PathBuf>,
    /// Generator and discriminator checkpoint (JSON).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// `cycle,phase,step,loss_d,loss_g,delta,gamma` CSV output.
    #[arg(long)]
    pub log: PathBuf,
    /// Comma-separated keywords; required when gamma > 0.
    #[arg(long, value_delimiter = ',')]
    pub keywords: Vec<String>,
    /// Weight of the keyword attention term; 0 trains with plain cross-entropy.
    #[arg(long, default_value_t = GanConfig::default().gamma)]
    pub gamma: f64,
    #[command(flatten)]
    pub opts: GanOpts,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Checkpoint written by `gan`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Scaling JSON from `glove` [default: fitted to the embeddings].
    #[arg(long)]
    pub scaling: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Write samples here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,
    /// The checkpoint was trained with --paper-literal-generator.
    #[arg(long)]
    pub paper_literal_generator: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Labelled CSV from `ingest`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Scaling JSON from `glove` [default: fitted to the embeddings].
    #[arg(long)]
    pub scaling: Option<PathBuf>,
    /// Comma-separated keywords.
    #[arg(long, value_delimiter = ',')]
    pub keywords: Vec<String>,
    /// Ascending gamma values.
    #[arg(long, value_delimiter = ',', default_values_t = SweepOptions::default().gammas)]
    pub gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = SweepOptions::default().seeds)]
    pub seeds: Vec<u64>,
    /// JSON report output.
    #[arg(long)]
    pub out: PathBuf,
    /// Text table output [default: standard output].
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub opts: GanOpts,
}

/// The parsed command line plus which flags were given explicitly.
pub struct Invocation {
    pub cli: Cli,
    matches: ArgMatches,
}

impl Invocation {
    pub fn parse_from<I, T>(args: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let matches = Cli::command().try_get_matches_from(args)?;
        let cli = Cli::from_arg_matches(&matches)?;
        Ok(Self { cli, matches })
    }

    /// Whether `id` was set on the command line of the subcommand.
    pub fn explicit(&self, id: &str) -> bool {
        self.matches.subcommand().and_then(|(_, m)| m.value_source(id)).is_some_and(|s| s == ValueSource::CommandLine)
    }

    /// Configuration file (or defaults) with explicit flags applied.
    pub fn run_config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let seed = cfg.resolve_seed(self.cli.seed)?;
        cfg.seed = Some(seed);
        cfg.glove.seed = seed;
        cfg.classifier.seed = seed;
        cfg.gan.seed = seed;
        commands::apply_flags(self, &mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<EnsembleArg> for EnsembleMode {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::MeanLogProb => EnsembleMode::MeanLogProb,
            EnsembleArg::MajorityVote => EnsembleMode::MajorityVote,
        }
    }
}

impl From<RecurrenceArg> for Recurrence {
    fn from(r: RecurrenceArg) -> Self {
        match r {
            RecurrenceArg::Relu => Recurrence::Relu,
            RecurrenceArg::Identity => Recurrence::Identity,
        }
    }
}

impl From<DeltaSpaceArg> for DeltaSpace {
    fn from(d: DeltaSpaceArg) -> Self {
        match d {
            DeltaSpaceArg::Scaled => DeltaSpace::Scaled,
            DeltaSpaceArg::Raw => DeltaSpace::Raw,
        }
    }
}

/// Exit status for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use dmk_core::Error as E;
    for cause in err.chain() {
        if cause.is::<InputError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Csv(_)
                | E::Json(_)
                | E::Format(_)
                | E::InvalidArgument(_)
                | E::NoData(_)
                | E::UnknownKeyword(_)
                | E::DegenerateDimension(_)
                | E::ShapeMismatch { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match Invocation::parse_from(args) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging(inv.cli.verbose);
    match commands::dispatch(&inv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
