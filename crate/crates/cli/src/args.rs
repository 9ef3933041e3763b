use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sylscore::dataset::{Cohort, SplitBy, SyllableSet, DEFAULT_TRAIN_RATIO};
use sylscore::dsp::Window;
use sylscore::scoring::report::Format;

#[derive(Debug, Parser)]
#[command(name = "sylscore", version, about = "Syllable pronunciation quality scoring")]
#[command(args_override_self = true)]
pub struct Cli {
    /// TOML file with default flag values (top-level keys or a table per
    /// subcommand); flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus (WAV files and manifest).
    Synth(SynthArgs),
    /// Train a classifier on sessions 1 and 2 of a cohort.
    Train(TrainArgs),
    /// Recompute train/test accuracy of one or more models.
    Eval(EvalArgs),
    /// Score rehabilitation sessions with a trained model.
    Score(ScoreArgs),
    /// Re-render a JSON report in another format.
    Report(ReportArgs),
}

fn severity(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("severity {v} is outside [0, 1]"))
    }
}

fn unit_open(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1)"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be non-negative"))
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long, default_value = "corpus")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub patients: usize,
    /// Syllables per session.
    #[arg(long, default_value_t = 20)]
    pub syllables: usize,
    #[arg(long, default_value_t = 16000)]
    pub sample_rate: u32,
    /// Seconds per syllable recording.
    #[arg(long, default_value_t = 0.8)]
    pub duration: f64,
    #[arg(long, default_value = "problem90")]
    pub syllable_set: SyllableSet,
    /// Severities of extra sessions (3, 4, ...) for every patient.
    #[arg(long, value_delimiter = ',', value_parser = severity)]
    pub severities: Vec<f64>,
    /// Write expert marks for the extra sessions: 1 iff severity < threshold.
    #[arg(long, value_parser = severity)]
    pub expert_threshold: Option<f64>,
    /// Downward F2/F3 shift at severity 1, Hz.
    #[arg(long, value_parser = non_negative)]
    pub formant_shift: Option<f64>,
    /// Spectral tilt at severity 1, dB per octave.
    #[arg(long, value_parser = non_negative)]
    pub tilt: Option<f64>,
    #[arg(long)]
    pub snr_clean: Option<f64>,
    #[arg(long)]
    pub snr_degraded: Option<f64>,
    /// Disable additive noise.
    #[arg(long)]
    pub no_noise: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DspArgs {
    /// Keep raw magnitudes instead of log10.
    #[arg(long)]
    pub no_log: bool,
    #[arg(long, default_value = "hann")]
    pub window: Window,
    /// STFT hop in samples.
    #[arg(long, default_value_t = 256)]
    pub hop: usize,
    /// Frames below this fraction of the loudest frame's energy are dropped.
    #[arg(long, default_value_t = 1e-4, value_parser = non_negative)]
    pub gate_ratio: f64,
    /// Stride between fragment starts, in frames.
    #[arg(long, default_value_t = 8)]
    pub fragment_hop: usize,
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// Drop patients lacking session 1 or 2 recordings instead of failing.
    #[arg(long)]
    pub drop_incomplete: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub manifest: ManifestArgs,
    /// all, men, women, or individual:<patient>.
    #[arg(long, default_value = "all")]
    pub cohort: Cohort,
    /// Model file to write.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Per-epoch trace csv (default: next to the model, `.trace.csv`).
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub dsp: DspArgs,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    pub learning_rate: f64,
    /// Global gradient-norm ceiling per batch.
    #[arg(long, default_value_t = 5.0, value_parser = positive)]
    pub clip_norm: f64,
    /// Disable gradient clipping.
    #[arg(long)]
    pub no_clip: bool,
    /// Standardize each frequency bin with training-split statistics.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value = "fragment")]
    pub split_by: SplitBy,
    #[arg(long, default_value_t = DEFAULT_TRAIN_RATIO, value_parser = unit_open)]
    pub train_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// text, csv or json (default: from the --out extension, else text).
    #[arg(long)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// Model file; repeat for a cohort grid.
    #[arg(long = "model", value_name = "PATH", required = true)]
    pub models: Vec<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Sessions to score (default: every session >= 3).
    #[arg(long, value_delimiter = ',')]
    pub sessions: Vec<u32>,
    /// Patients to score (default: the model's cohort).
    #[arg(long = "patient", value_name = "ID")]
    pub patients: Vec<String>,
    /// Session score as the mean over fragments instead of syllables.
    #[arg(long)]
    pub fragment_mean: bool,
    /// Correlate syllable scores with the manifest's expert marks.
    #[arg(long)]
    pub expert_marks: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON report written by eval, score or train.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}
