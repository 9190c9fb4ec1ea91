use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

/// Food defect detection data tooling: dataset statistics and splits,
/// box-level mixing, pseudo-label calibration and a mean-teacher simulation.
///
/// Exit status: 0 on success, 1 on usage or validation errors, 2 on I/O
/// errors and unreadable or corrupted input files.
#[derive(Debug, Parser)]
#[command(name = "fddet", version)]
pub struct Cli {
    /// JSON file supplying defaults for any knob; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for augment and calibrate [default: all cores].
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Increase log detail on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    /// Only report errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize an annotation file.
    Stats(StatsArgs),
    /// Partition images into train and test annotation files.
    Split(SplitArgs),
    /// Blend same-category boxes across images.
    Augment(AugmentArgs),
    /// Calibrate teacher predictions into pseudo-labels.
    Calibrate(CalibrateArgs),
    /// Run the mean-teacher simulation.
    Simulate(SimulateArgs),
    /// Write a synthetic scenario, its feature streams and optionally a
    /// synthetic detection dataset.
    GenSynth(GenSynthArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Annotation file.
    #[arg(long, short)]
    pub input: PathBuf,

    /// Write the JSON report here and print a table; without it the JSON
    /// goes to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, short)]
    pub input: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub train_output: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub test_output: PathBuf,

    /// Share of images assigned to train, in (0, 1) [default: 0.7].
    #[arg(long)]
    pub train_fraction: Option<f64>,

    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long, short)]
    pub input: PathBuf,

    /// Directory holding one P6 PPM per image, named by `file_name`.
    #[arg(long, value_name = "DIR")]
    pub images: PathBuf,

    /// Receives the mixed rasters and `mixes.json`.
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,

    /// Beta shape for the mixing ratio [default: 1].
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Beta shape for the mixing ratio [default: 1].
    #[arg(long)]
    pub beta: Option<f64>,

    /// Per-box mixing probability [default: 0.5].
    #[arg(long)]
    pub apply_prob: Option<f64>,

    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Leave normal-condition boxes untouched.
    #[arg(long)]
    pub defects_only: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Predictions in annotation-file form; every record needs a `score`.
    #[arg(long, short)]
    pub input: PathBuf,

    #[arg(long, short)]
    pub output: PathBuf,

    /// Raster directory for built-in color-histogram features.
    #[arg(
        long,
        value_name = "DIR",
        required_unless_present = "features",
        conflicts_with = "features"
    )]
    pub images: Option<PathBuf>,

    /// JSON object mapping box digests to feature vectors.
    #[arg(long, value_name = "FILE")]
    pub features: Option<PathBuf>,

    /// Per-stage audit trail as JSON lines.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,

    /// Confidence threshold [default: 0.35].
    #[arg(long)]
    pub tau: Option<f64>,

    /// Cosine similarity for visual peers [default: 0.85].
    #[arg(long)]
    pub sim_threshold: Option<f64>,

    /// IoU for duplicate suppression [default: 0.65].
    #[arg(long)]
    pub iou_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON; missing fields take the shipped defaults.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,

    /// Per-iteration records as JSON lines.
    #[arg(long, short)]
    pub output: PathBuf,

    /// Run summary as JSON.
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub iterations: Option<usize>,

    /// Teacher EMA momentum.
    #[arg(long)]
    pub momentum: Option<f64>,

    /// Whether the teacher averages normalization buffers too.
    #[arg(long, value_name = "BOOL")]
    pub buffer_ema: Option<bool>,

    /// Confidence threshold for pseudo-labels.
    #[arg(long)]
    pub tau: Option<f64>,

    /// Select pseudo-labels with the full calibration pipeline.
    #[arg(long)]
    pub use_cgpc: bool,

    /// Also train a labeled-only student and report its accuracy.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,

    /// Scenario JSON to expand; defaults to the shipped scenario.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Also write a detection dataset with this many images.
    #[arg(long, value_name = "N")]
    pub dataset_images: Option<usize>,

    /// Total boxes in the detection dataset.
    #[arg(long, value_name = "N")]
    pub dataset_instances: Option<usize>,

    /// Images carrying at least one defect box.
    #[arg(long, value_name = "N")]
    pub defect_images: Option<usize>,

    /// Skip writing rasters for the detection dataset.
    #[arg(long)]
    pub no_rasters: bool,
}
