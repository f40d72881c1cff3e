//! File configuration: one TOML document with an optional table per
//! subcommand. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use mist_core::channel::{ChannelKind, DEFAULT_OUTAGE_SNR_DB};
use mist_core::codes::CodeConfig;
use mist_core::eval::{BenchConfig, EvalConfig, SweepPoint};
use mist_core::mist::TrainingConfig;
use serde::{Deserialize, Serialize};

use crate::args::{ChannelArg, ChannelFlags, TrainingFlags};
use crate::{usage, Failure};

/// Directory that relative output paths are resolved against.
pub const OUT_DIR_VAR: &str = "MIST_OUT_DIR";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Shared by `train` and `sweep`.
    pub training: TrainingConfig,
    pub train: TrainOutputs,
    pub eval: EvalSection,
    pub sweep: SweepSection,
    pub bench: BenchSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOutputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub decoders: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    /// Defaults to the checkpoint's code, then to the standard code.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeConfig>,
    pub run: EvalConfig,
    pub out: PathBuf,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            decoders: vec!["viterbi-hard".into(), "viterbi-soft".into()],
            checkpoint: None,
            code: None,
            run: EvalConfig::default(),
            out: "results.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub grid: Vec<SweepPoint>,
    pub out: PathBuf,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            grid: [3, 6, 12, 24]
                .into_iter()
                .map(|k| SweepPoint {
                    kernel_size: k,
                    widths: vec![10, 50, 50],
                })
                .collect(),
            out: "loss.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub run: BenchConfig,
    pub out: PathBuf,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            run: BenchConfig::default(),
            out: "latency.csv".into(),
        }
    }
}

pub fn load(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("configuration types serialize to TOML")
}

/// Resolves a relative output path against `$MIST_OUT_DIR` when set.
pub fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// `start:stop[:step]` (inclusive) or a comma list of numbers.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || usage(format!("bad SNR list {text:?}; use start:stop[:step] or a comma list"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let (start, stop, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1.0),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(bad()),
        };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

/// Comma-separated list of unsigned integers.
pub fn parse_list(text: &str) -> Result<Vec<usize>, Failure> {
    let values = text
        .split([',', '-'])
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| usage(format!("bad integer list {text:?}")))?;
    if values.is_empty() {
        return Err(usage("empty list"));
    }
    Ok(values)
}

pub fn parse_code(text: &str) -> Result<CodeConfig, Failure> {
    text.parse().map_err(|e| usage(format!("{e}")))
}

pub fn apply_channel(flags: &ChannelFlags, channel: &mut ChannelKind) -> Result<(), Failure> {
    let (alpha, outage_snr) = match *channel {
        ChannelKind::Outage { alpha, outage_snr_db } => (alpha, outage_snr_db),
        ChannelKind::Awgn => (0.5, DEFAULT_OUTAGE_SNR_DB),
    };
    let outage = match flags.channel {
        Some(ChannelArg::Outage) => true,
        Some(ChannelArg::Awgn) => false,
        None => matches!(channel, ChannelKind::Outage { .. }),
    };
    if !outage {
        if flags.alpha.is_some() || flags.outage_snr.is_some() {
            return Err(usage("--alpha and --outage-snr need --channel outage"));
        }
        *channel = ChannelKind::Awgn;
        return Ok(());
    }
    *channel = ChannelKind::Outage {
        alpha: flags.alpha.unwrap_or(alpha),
        outage_snr_db: flags.outage_snr.unwrap_or(outage_snr),
    };
    Ok(())
}

pub fn apply_training(flags: &TrainingFlags, cfg: &mut TrainingConfig) -> Result<(), Failure> {
    if let Some(code) = &flags.code {
        let parsed = parse_code(code)?;
        // a descriptor without n= keeps the configured blocklength
        cfg.code = if code.contains("n=") { parsed } else { parsed.with_n(cfg.code.n()) };
    }
    if let Some(n) = flags.n {
        cfg.code = cfg.code.clone().with_n(n);
    }
    if let Some(s) = &flags.snr_set {
        cfg.snr_set = parse_grid(s)?;
    }
    if let Some(v) = flags.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = flags.iters {
        cfg.iterations = v;
    }
    if let Some(v) = flags.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.kernel_size {
        cfg.kernel_size = v;
    }
    if let Some(w) = &flags.widths {
        cfg.widths = parse_list(w)?;
    }
    if let Some(v) = flags.log_every {
        cfg.loss_log_every = v;
    }
    apply_channel(&flags.channel, &mut cfg.channel)?;
    cfg.validate().map_err(|e| usage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:6:1").unwrap(), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(parse_grid("0:8").unwrap().len(), 9);
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("-2,3.5").unwrap(), vec![-2.0, 3.5]);
        for bad in ["", "1:0", "0:1:0", "a,b", "1:2:3:4"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("10,50,50").unwrap(), vec![10, 50, 50]);
        assert_eq!(parse_list("5-10-10").unwrap(), vec![5, 10, 10]);
        assert!(parse_list("").is_err());
        assert!(parse_list("3,x").is_err());
    }

    #[test]
    fn defaults_survive_a_toml_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = to_toml(&cfg);
        assert_eq!(toml::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("[training]\nbatch = 3\n").is_err());
        assert!(toml::from_str::<ExperimentConfig>("[nonsense]\n").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let mut cfg: TrainingConfig = toml::from_str("iterations = 5\nseed = 1\nbatch_size = 8\n").unwrap();
        let flags = TrainingFlags {
            seed: Some(7),
            code: Some("conv:5,7".into()),
            n: Some(40),
            ..TrainingFlags::default()
        };
        apply_training(&flags, &mut cfg).unwrap();
        assert_eq!((cfg.iterations, cfg.seed, cfg.batch_size, cfg.code.n()), (5, 7, 8, 40));
    }

    #[test]
    fn outage_flags() {
        let mut ch = ChannelKind::Awgn;
        let flags = ChannelFlags {
            channel: Some(ChannelArg::Outage),
            alpha: Some(0.3),
            outage_snr: None,
        };
        apply_channel(&flags, &mut ch).unwrap();
        assert_eq!(
            ch,
            ChannelKind::Outage {
                alpha: 0.3,
                outage_snr_db: -10.0
            }
        );
        let stray = ChannelFlags {
            channel: Some(ChannelArg::Awgn),
            alpha: Some(0.3),
            outage_snr: None,
        };
        assert!(apply_channel(&stray, &mut ch).is_err());
    }
}
