//! Command-line surface: one subcommand per pipeline stage.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "ruptura",
    version,
    about = "Longitudinal discontinuity estimation and forecasting on region-week panels",
    propagate_version = true
)]
pub struct Cli {
    /// Cap internal parallelism at N threads (results are identical for any N)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a panel, apply transforms, and write the result
    Ingest(IngestArgs),
    /// Estimate per-region discontinuities for one event type
    Estimate(EstimateArgs),
    /// Randomized control events: estimator validity summary
    Placebo(PlaceboArgs),
    /// Assemble a feature dataset from pre-event data
    Features(FeaturesArgs),
    /// Train a model on a feature dataset
    Train(TrainArgs),
    /// Evaluate a trained model against a baseline
    Evaluate(EvaluateArgs),
    /// Difference-in-differences estimate for one target region
    Did(DidArgs),
    /// Generate a synthetic cohort with planted ground truth
    Synth(SynthArgs),
    /// One-command reproduction: synth/ingest, estimate, features, train, evaluate
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug, Clone)]
pub struct WindowArgs {
    /// Event-window half-width T
    #[arg(long = "half-window", default_value_t = 9)]
    pub half_window: usize,
    /// Buffer weeks excluded around the event
    #[arg(long, default_value_t = 1)]
    pub buffer: usize,
    /// Minimum observed points per fitted segment
    #[arg(long = "min-points", default_value_t = 3)]
    pub min_points: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SplitArgs {
    /// Seed for the region shuffle
    #[arg(long = "split-seed", default_value_t = 7)]
    pub split_seed: u64,
    /// Train,dev,test ratios
    #[arg(long, default_value = "0.6,0.2,0.2")]
    pub ratios: String,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long = "score-name")]
    pub score_name: String,
    /// Drop observations with fewer users than this
    #[arg(long = "min-users")]
    pub min_users: Option<u64>,
    /// Difference each series at this lag (weeks) before filtering;
    /// the bare flag uses the seasonal lag of 52
    #[arg(long = "difference-lag", num_args = 0..=1, default_missing_value = "52")]
    pub difference_lag: Option<u32>,
    /// Z-score each region's series after filtering
    #[arg(long, default_value_t = false)]
    pub zscore: bool,
    /// Interpret date-valued week columns as weeks since this date's Monday
    #[arg(long = "epoch-date")]
    pub epoch_date: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long = "score-name", default_value = "score")]
    pub score_name: String,
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long = "event-type")]
    pub event_type: String,
    #[arg(long = "epoch-date")]
    pub epoch_date: Option<String>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Also re-estimate under these buffer widths (comma list, e.g. 0,1,2)
    #[arg(long = "ablate-buffers")]
    pub ablate_buffers: Option<String>,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlaceboArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long = "score-name", default_value = "score")]
    pub score_name: String,
    #[arg(long = "epoch-date")]
    pub epoch_date: Option<String>,
    /// Total control episodes to estimate
    #[arg(long, default_value_t = 5000)]
    pub episodes: usize,
    /// RNG seed (falls back to RUPTURA_SEED, then 42)
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long = "score-name", default_value = "score")]
    pub score_name: String,
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long = "event-type")]
    pub event_type: String,
    /// Feature blocks: comma list over P, RC, cov, exog
    #[arg(long)]
    pub features: String,
    /// Covariate panel (required with `cov`)
    #[arg(long = "cov-panel")]
    pub cov_panel: Option<PathBuf>,
    #[arg(long = "cov-score-name", default_value = "covariate")]
    pub cov_score_name: String,
    /// Embedding table (required with `exog`)
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long = "epoch-date")]
    pub epoch_date: Option<String>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset CSV (layout sidecar defaults to <dataset>.layout.json)
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Model family: ridge | knn | random_forest | extra_trees | ffn |
    /// baseline_no_change | baseline_mean | baseline_forecast
    #[arg(long)]
    pub family: String,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "n-estimators")]
    pub n_estimators: Option<usize>,
    /// Tree depth cap; omit for unlimited
    #[arg(long = "max-depth")]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "learning-rate", allow_negative_numbers = true)]
    pub learning_rate: Option<f64>,
    /// Hidden layer count (ffn)
    #[arg(long)]
    pub layers: Option<usize>,
    /// Hidden layer width (ffn)
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<usize>,
    #[arg(long = "max-ar-order")]
    pub max_ar_order: Option<usize>,
    /// Train one model per target instead of a single joint model
    #[arg(long = "per-target", default_value_t = false)]
    pub per_target: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Which split to train on: train | all
    #[arg(long, default_value = "train")]
    pub split: String,
    #[command(flatten)]
    pub split_args: SplitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long)]
    pub model: PathBuf,
    /// Baseline family to compare against: mean | no_change | forecast
    #[arg(long)]
    pub baseline: Option<String>,
    /// Which split to evaluate on: test | dev | train | all
    #[arg(long, default_value = "test")]
    pub split: String,
    #[command(flatten)]
    pub split_args: SplitArgs,
    /// Region metadata CSV (required with --strata)
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Stratified breakdown: ses | urbanicity
    #[arg(long)]
    pub strata: Option<String>,
    #[arg(long = "strata-bins", default_value_t = 3)]
    pub strata_bins: usize,
    /// JSON file with explicit ascending cut points
    #[arg(long = "strata-thresholds")]
    pub strata_thresholds: Option<PathBuf>,
    /// Also write per-episode predictions CSV here
    #[arg(long = "predictions-out")]
    pub predictions_out: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DidArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long = "score-name", default_value = "score")]
    pub score_name: String,
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub meta: PathBuf,
    /// Target (treated) region id
    #[arg(long)]
    pub target: String,
    #[arg(long = "event-type")]
    pub event_type: String,
    /// Number of matched control regions
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long = "epoch-date")]
    pub epoch_date: Option<String>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Generator config JSON
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Pipeline config JSON
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}
