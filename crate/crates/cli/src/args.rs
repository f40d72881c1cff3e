use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "mist", version, about = "Train and evaluate channel decoders")]
pub struct Cli {
    /// Print the merged configuration as TOML and exit.
    #[arg(long, global = true)]
    pub show_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a CNN decoder with mixed-SNR sampling.
    Train(TrainArgs),
    /// Monte-Carlo error rates of one or more decoders.
    Eval(EvalArgs),
    /// Training-loss curves over kernel sizes and channel widths.
    Sweep(SweepArgs),
    /// Per-dataword CNN decode latency.
    Bench(BenchArgs),
    /// Print every default setting as TOML.
    ShowConfig,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum ChannelArg {
    Awgn,
    Outage,
}

#[derive(Args, Debug, Default)]
pub struct ChannelFlags {
    #[arg(long, value_enum)]
    pub channel: Option<ChannelArg>,
    /// Per-symbol outage probability.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// SNR of symbols in outage, dB.
    #[arg(long, allow_hyphen_values = true)]
    pub outage_snr: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct TrainingFlags {
    /// TOML configuration file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Code descriptor, e.g. conv:5,7 or ldpc:10,20:seed=1.
    #[arg(long)]
    pub code: Option<String>,
    /// Blocklength.
    #[arg(long)]
    pub n: Option<usize>,
    /// Training SNRs in dB: start:stop[:step] or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_set: Option<String>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub kernel_size: Option<usize>,
    /// Channel widths of the convolution blocks, e.g. 10,50,50.
    #[arg(long)]
    pub widths: Option<String>,
    /// Record the loss every this many iterations.
    #[arg(long)]
    pub log_every: Option<usize>,
    #[command(flatten)]
    pub channel: ChannelFlags,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub training: TrainingFlags,
    /// Checkpoint path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Loss CSV path; defaults to loss.csv next to the checkpoint.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated decoder names.
    #[arg(long)]
    pub decoders: Option<String>,
    /// Checkpoint for the cnn decoder.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    pub code: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// SNR grid in dB: start:stop[:step] or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    #[command(flatten)]
    pub channel: ChannelFlags,
    #[arg(long)]
    pub min_blocks: Option<u64>,
    #[arg(long)]
    pub min_block_errors: Option<u64>,
    #[arg(long)]
    pub max_blocks: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parallel workers (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Results CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub training: TrainingFlags,
    /// Kernel sizes to compare, e.g. 3,6,12,24.
    #[arg(long)]
    pub kernel_sizes: Option<String>,
    /// Width sets separated by ';' with channels separated by ',' or '-', e.g. "10-50-50;5-10-10".
    #[arg(long)]
    pub width_sets: Option<String>,
    /// Loss CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub code: Option<String>,
    /// Blocklengths, e.g. 100,200,1000.
    #[arg(long)]
    pub n: Option<String>,
    /// Batch sizes, e.g. 1,256.
    #[arg(long)]
    pub batch: Option<String>,
    #[arg(long)]
    pub kernel_size: Option<usize>,
    #[arg(long)]
    pub widths: Option<String>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Latency CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
