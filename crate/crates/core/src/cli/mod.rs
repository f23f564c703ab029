//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 data or file-format
//! error, 3 a verification ran but its property failed. Every artifact goes
//! under `--out`; reruns with the same `--seed` write identical bytes.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::io::ConfigFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "spatial-correction",
    version,
    about = "Markov boundary label noise and spatial label correction"
)]
pub struct Cli {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Key-value config file with seed/out/threads and [preset.NAME] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply Markov boundary noise (or random dilate/erode) to a mask.
    GenNoise(GenNoiseArgs),
    /// Signed distance field of a mask, written as f32 GTF.
    Sdf(SdfArgs),
    /// Mean signed-distance gap between paired predicted and clean masks.
    EstimateBias(EstimateBiasArgs),
    /// Correct predicted masks from logits and a bias estimate.
    Correct(CorrectArgs),
    /// Fit the reference logistic model.
    Train(TrainArgs),
    /// Predict logits and masks with a fitted reference model.
    Predict(PredictArgs),
    /// Run the iterative correction loop.
    ScRun(ScRunArgs),
    /// Run a verification experiment.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Ablation sweep over noise level or validation size.
    Sweep(SweepArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Clean-validation sample size for a target accuracy.
    Bound(BoundArgs),
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Named preset (built-in or from --config).
    #[arg(long)]
    pub preset: Option<String>,
    /// Markov steps T.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub theta2: Option<f64>,
    #[arg(long)]
    pub theta3: Option<f64>,
    #[arg(long)]
    pub smooth_sigma: Option<f64>,
    /// Use random dilate/erode by up to this many pixels instead.
    #[arg(long, conflicts_with_all = ["preset", "steps"])]
    pub dilate_erode: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FileFormat {
    Gtf,
    Pgm,
}

#[derive(Debug, Args)]
pub struct GenNoiseArgs {
    /// Input mask (.pgm or GTF). Default: a centered disk.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Side of the default disk fixture.
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Number of independent noisy samples.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = FileFormat::Gtf)]
    pub format: FileFormat,
}

#[derive(Debug, Args)]
pub struct SdfArgs {
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateBiasArgs {
    /// Predicted masks; paired with --clean-dir by sorted file order.
    #[arg(long)]
    pub pred_dir: PathBuf,
    #[arg(long)]
    pub clean_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RouteArg {
    Logit,
    Naive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LambdaSignArg {
    Corrective,
    Literal,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    /// f32 logit GTFs; the predicted SDF is taken from their zero level.
    #[arg(long)]
    pub logits_dir: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_hat: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = RouteArg::Logit)]
    pub route: RouteArg,
    /// Debug only: sign of λ.
    #[arg(long, value_enum, default_value_t = LambdaSignArg::Corrective)]
    pub lambda_sign: LambdaSignArg,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub images_dir: PathBuf,
    /// Masks paired with the images by sorted order.
    #[arg(long)]
    pub labels_dir: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// model.json written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub images_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Disks,
    Ellipses,
}

#[derive(Debug, Clone, Args)]
pub struct SynthOpts {
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, value_enum, default_value_t = FamilyArg::Disks)]
    pub family: FamilyArg,
    #[arg(long)]
    pub radius_min: Option<f64>,
    #[arg(long)]
    pub radius_max: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub contrast: f64,
    #[arg(long, default_value_t = 0.25)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub blur_sigma: f64,
    /// Interior holes per mask.
    #[arg(long, default_value_t = 0)]
    pub holes: usize,
    #[arg(long, default_value_t = 2.0)]
    pub hole_radius: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CorrectionOpts {
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 5)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub stop_threshold: f64,
    #[arg(long, value_enum, default_value_t = RouteArg::Logit)]
    pub route: RouteArg,
    #[arg(long, value_enum, default_value_t = LambdaSignArg::Corrective)]
    pub lambda_sign: LambdaSignArg,
}

#[derive(Debug, Args)]
pub struct ScRunArgs {
    #[command(flatten)]
    pub synth: SynthOpts,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub correction: CorrectionOpts,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 8)]
    pub val_count: usize,
    #[arg(long, default_value_t = 48)]
    pub test_count: usize,
    /// Train through an external process via files in this directory.
    #[arg(long)]
    pub external_dir: Option<PathBuf>,
    /// Polling interval for the DONE file.
    #[arg(long, default_value_t = 200)]
    pub poll_ms: u64,
    /// Give up on an external round after this many seconds.
    #[arg(long, default_value_t = 3600)]
    pub timeout_s: u64,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// One-step Bayes mask against Monte Carlo on a disk.
    Lemma1(Lemma1Args),
    /// One-step per-site expectations against Monte Carlo on a disk.
    Expectations(Lemma1Args),
    /// Empirical failure rate of the clean-validation sample size.
    Theorem1(Theorem1Args),
}

#[derive(Debug, Args)]
pub struct Lemma1Args {
    #[arg(long, default_value_t = 0.7)]
    pub theta1: f64,
    #[arg(long, default_value_t = 0.9)]
    pub theta2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub theta3: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Side of the disk fixture.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
}

#[derive(Debug, Args)]
pub struct BoundOpts {
    #[arg(long, default_value_t = 1.0)]
    pub eps0: f64,
    #[arg(long, default_value_t = 20.0)]
    pub eps1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct Theorem1Args {
    #[command(flatten)]
    pub bound: BoundOpts,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Validation pool size.
    #[arg(long, default_value_t = 3072)]
    pub pool: usize,
    #[arg(long, default_value_t = 1024)]
    pub held_out: usize,
    /// Grid side of the fixtures; |I| = size².
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Override the computed validation size.
    #[arg(long)]
    pub validation_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SweepKindArg {
    NoiseLevel,
    ValSize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKindArg,
    /// Comma-separated settings (T values or validation sizes).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    #[command(flatten)]
    pub synth: SynthOpts,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub correction: CorrectionOpts,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 8)]
    pub val_count: usize,
    #[arg(long, default_value_t = 48)]
    pub test_count: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub synth: SynthOpts,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub bound: BoundOpts,
    #[arg(long, default_value_t = 65536)]
    pub image_size: u64,
}

/// Settings resolved from flags over the config file.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub config: ConfigFile,
}

pub(crate) enum Outcome {
    Ok,
    VerificationFailed,
}

fn exit_for(e: &Error) -> i32 {
    if e.is_data_error() {
        EXIT_DATA
    } else {
        EXIT_USAGE
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let config = match &cli.config {
        Some(p) => match ConfigFile::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_for(&e);
            }
        },
        None => ConfigFile::default(),
    };
    let threads = cli.threads.or(config.threads);
    let ctx = Context {
        seed: cli.seed.or(config.seed).unwrap_or(0),
        out: cli
            .out
            .clone()
            .or(config.out.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        config,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| commands::dispatch(&cli.command, &ctx)) {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::VerificationFailed) => EXIT_VERIFY,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
