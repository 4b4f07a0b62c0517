use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fecg", version, about = "Fetal ECG separation from few abdominal channels")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for everything random; overrides the configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON configuration; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only errors on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

impl Global {
    pub fn log_level(&self) -> log::LevelFilter {
        if self.quiet {
            return log::LevelFilter::Error;
        }
        match self.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            2 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Separate maternal and fetal ECG in one record.
    Decompose(DecomposeArgs),
    /// Detect R peaks on one channel.
    Rpeaks(RpeaksArgs),
    /// Denoise a matrix given as CSV by optimal singular-value shrinkage.
    Shrink(ShrinkArgs),
    /// Generate semi-real mixtures with known fetal beats.
    Simulate(SimulateArgs),
    /// Score fetal R peaks against annotated recordings.
    Evaluate(EvaluateArgs),
    /// Simulate, decompose and evaluate in one run.
    Pipeline(PipelineArgs),
}

/// Preprocessing overrides shared by commands that filter their input.
#[derive(Debug, Args, Default)]
pub struct FilterArgs {
    /// Lowpass cutoff, Hz.
    #[arg(long)]
    pub lp_cutoff: Option<f64>,
    /// Notch centre, Hz.
    #[arg(long)]
    pub notch: Option<f64>,
    /// Short median window of the baseline removal, ms.
    #[arg(long)]
    pub median_short_ms: Option<f64>,
    /// Long median window of the baseline removal, ms.
    #[arg(long)]
    pub median_long_ms: Option<f64>,
}

/// Separation overrides shared by `decompose`, `evaluate` and `pipeline`.
#[derive(Debug, Args, Default)]
pub struct SeparationArgs {
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Resolution of the channel-combination grid.
    #[arg(long)]
    pub grid_steps: Option<usize>,
    /// Refinement passes after the first fetal estimate.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Smooth fetal cycles with a median over this many similar cycles.
    #[arg(long, value_name = "K")]
    pub nonlocal_median: Option<usize>,
    /// Inflation of the noise-level estimate used by the shrinker.
    #[arg(long)]
    pub c_noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Record file (`.csv` or WFDB `.hea`).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Channels to use, 1-based and comma separated; all by default.
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<usize>>,
    #[command(flatten)]
    pub separation: SeparationArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Maternal,
    Fetal,
}

#[derive(Debug, Args)]
pub struct RpeaksArgs {
    /// Record file (`.csv` or WFDB `.hea`).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Channel to analyse, 1-based.
    #[arg(long, default_value_t = 1)]
    pub channel: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Maternal)]
    pub mode: ModeArg,
    /// Skip lowpass, notch and baseline removal.
    #[arg(long)]
    pub raw: bool,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct ShrinkArgs {
    /// Matrix as plain CSV, one row per line, no header.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long)]
    pub c_noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Maternal donor records; synthetic donors are used when absent.
    #[arg(long, requires = "fetal_dir")]
    pub maternal_dir: Option<PathBuf>,
    /// Fetal donor records.
    #[arg(long, requires = "maternal_dir")]
    pub fetal_dir: Option<PathBuf>,
    /// Number of synthetic donors of each kind.
    #[arg(long, conflicts_with = "maternal_dir")]
    pub donors: Option<usize>,
    /// Fetal to maternal RMS ratio.
    #[arg(long)]
    pub r: Option<f64>,
    /// Signal-to-noise ratio in dB, or `inf` for no noise.
    #[arg(long, value_parser = parse_snr)]
    pub snr: Option<Snr>,
    /// Record length, seconds.
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Records with `.ann.json` (or WFDB `.fqrs`) fetal annotations.
    #[arg(long)]
    pub truth: PathBuf,
    /// Estimates as `<est>/<record>/fetal_peaks.json`, as written by
    /// `decompose`. Without it, the truth records are decomposed here.
    #[arg(long)]
    pub est: Option<PathBuf>,
    /// Matching window, ms.
    #[arg(long)]
    pub window_ms: Option<f64>,
    /// Further matching windows reported alongside, ms.
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<f64>>,
    /// When decomposing here: evaluate every subset of this many channels.
    #[arg(long, conflicts_with = "est")]
    pub subset_size: Option<usize>,
    #[command(flatten)]
    pub separation: SeparationArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Fetal to maternal RMS ratio of the single condition.
    #[arg(long, conflicts_with = "sweep")]
    pub r: Option<f64>,
    /// Signal-to-noise ratio in dB, or `inf`.
    #[arg(long, value_parser = parse_snr, conflicts_with = "sweep")]
    pub snr: Option<Snr>,
    /// Run the nine (ratio, SNR) conditions of the standard sweep.
    #[arg(long)]
    pub sweep: bool,
    /// Synthetic donors of each kind (one record per donor pair).
    #[arg(long)]
    pub donors: Option<usize>,
    #[arg(long, requires = "fetal_dir")]
    pub maternal_dir: Option<PathBuf>,
    #[arg(long, requires = "maternal_dir")]
    pub fetal_dir: Option<PathBuf>,
    /// Record length, seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Simulated channels to decompose, 1-based.
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<usize>>,
    #[arg(long)]
    pub window_ms: Option<f64>,
    #[command(flatten)]
    pub separation: SeparationArgs,
}

/// Signal-to-noise ratio in dB; `None` means no added noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr(pub Option<f64>);

fn parse_snr(s: &str) -> Result<Snr, String> {
    match s {
        "inf" | "none" => Ok(Snr(None)),
        _ => s
            .parse::<f64>()
            .map(|v| Snr(Some(v)))
            .map_err(|_| format!("expected a number of dB or `inf`, got `{s}`")),
    }
}
