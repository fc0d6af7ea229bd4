use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "derma",
    version,
    about = "Skin-tone estimation pipelines on synthetic dermatoscopic images",
    after_help = "Exit codes: 0 success, 2 usage or validation error, 3 I/O error, 4 numeric failure.\n\
                  DERMA_THREADS caps the number of worker threads."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with masks, metadata and ground-truth labels.
    Generate(GenerateArgs),
    /// Recompute ground-truth Fitzpatrick labels of a dataset into a CSV file.
    Label(LabelArgs),
    /// Estimate per-image ITA with one method.
    Estimate(EstimateArgs),
    /// Fit a linear calibration of one method's ITA onto a reference method.
    Calibrate(CalibrateArgs),
    /// Train the ordinal Fitzpatrick classifier.
    Train(TrainArgs),
    /// Compare estimates and predictions against ground truth.
    Evaluate(EvaluateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Label(_) => "label",
            Command::Estimate(_) => "estimate",
            Command::Calibrate(_) => "calibrate",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
        }
    }
}

/// Every subcommand accepts `--config FILE`: a TOML file whose keys are
/// long flag names. Top-level keys apply where the flag exists; keys in a
/// `[subcommand]` table must be valid for it. Flags on the command line win.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ConfigArg {
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    /// Number of images; at least one per lighting condition (18).
    #[arg(long, default_value_t = 180)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub m_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub m_max: f64,
    /// Image side in pixels.
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    #[arg(long, default_value_t = 6)]
    pub max_hairs: u32,
    /// Apply each lighting condition uniformly, without border shading.
    #[arg(long)]
    pub uniform_lighting: bool,
    /// Replace the dataset files of a non-empty output directory.
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LabelArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output CSV with columns id, gt_fp, provisional_fp, mean_ita.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Segmentation,
    Patch,
    Quantization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSourceArg {
    Original,
    Enhanced,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Calibration model written by `calibrate`; applied to every estimate.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Minimum skin pixels for the segmentation method.
    #[arg(long, default_value_t = 10)]
    pub min_skin_pixels: usize,
    #[arg(long, default_value_t = 32)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 8)]
    pub n_patches: usize,
    /// Image whose value channel is thresholded for the quantization lesion mask.
    #[arg(long, value_enum, default_value_t = MaskSourceArg::Original)]
    pub mask_source: MaskSourceArg,
    #[arg(long, default_value_t = 5)]
    pub dilation_radius: usize,
    #[arg(long, default_value_t = 20_000)]
    pub max_points: usize,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 8)]
    pub k_max: usize,
    /// Seed of k-means initialization and pixel subsampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrateArgs {
    /// Estimates CSV of the method to calibrate.
    #[arg(long)]
    pub estimates: PathBuf,
    /// Estimates CSV of the reference method.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of the paired images used for fitting; the rest is held out
    /// and reported on.
    #[arg(long, default_value_t = 1.0)]
    pub fit_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also fit one model per lighting condition (needs --dataset).
    #[arg(long, requires = "dataset")]
    pub per_lighting: bool,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Model JSON. The epoch log and per-image predictions are written next
    /// to it as `<stem>.log.csv` and `<stem>.predictions.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Labels CSV from `label`; defaults to the labels in the dataset metadata.
    #[arg(long)]
    pub gt_labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Width of an optional tanh hidden layer.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Feed raw [0, 1] features without per-feature standardization.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    pub test_fraction: f64,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Estimate CSVs written by `estimate`, one per method.
    #[arg(long, num_args = 1..)]
    pub estimates: Vec<PathBuf>,
    /// Predictions CSV written by `train`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Name of the prediction-only method in the report.
    #[arg(long, default_value = "model")]
    pub model_name: String,
    /// Labels CSV from `label`; defaults to the labels in the dataset metadata.
    #[arg(long)]
    pub gt_labels: Option<PathBuf>,
    /// Method whose ITA is the Bland-Altman reference.
    #[arg(long, default_value = "segmentation")]
    pub reference: String,
    /// Evaluate only the images of this split of the predictions file.
    #[arg(long, value_enum, requires = "predictions")]
    pub split: Option<SplitArg>,
    /// Report JSON. Bland-Altman points and confusion matrices are written
    /// next to it as `<stem>.bland_altman.csv` and `<stem>.confusion.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap_resamples: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub config: ConfigArg,
}
