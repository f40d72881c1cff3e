//! Per-dataword decode timing.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::decoders::{CnnBlockDecoder, Decoder};
use super::report::write_comments;
use crate::channel::{bpsk_symbol, ChannelKind, RandomStream};
use crate::codes::{Code, CodeConfig};
use crate::error::{Error, Result};
use crate::neural::{CnnConfig, CnnDecoder, Mode};

const LATENCY_STREAM: u64 = 4;

/// SNR of the timing inputs; decode cost does not depend on it for the CNN.
const BENCH_SNR_DB: f64 = 2.0;

pub const LATENCY_HEADER: [&str; 6] = ["decoder", "n", "batch", "mean_ms", "median_ms", "p99_ms"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub decoder: String,
    pub n: usize,
    pub batch: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
    #[serde(skip)]
    pub repetitions: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LatencyReport {
    pub rows: Vec<LatencyRow>,
}

impl LatencyReport {
    pub fn get(&self, n: usize, batch: usize) -> Option<&LatencyRow> {
        self.rows.iter().find(|r| r.n == n && r.batch == batch)
    }

    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        write_comments(&mut out, comments)?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(LATENCY_HEADER)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Times `repetitions` decodes of one batch after `warmup` untimed ones.
/// Each repetition contributes batch time / batch size.
pub fn time_decoder(
    decoder: &dyn Decoder,
    code: &Code,
    batch: usize,
    warmup: usize,
    repetitions: usize,
    seed: u64,
) -> Result<LatencyRow> {
    if batch == 0 || repetitions == 0 {
        return Err(Error::invalid("batch size and repetitions must be positive"));
    }
    let n = code.n();
    let channel = ChannelKind::Awgn.at(BENCH_SNR_DB);
    let mut rng = RandomStream::derived(seed, &[LATENCY_STREAM, n as u64]);
    let mut y = vec![0.0; batch * n];
    for row in y.chunks_mut(n) {
        let cw = code.encode(&rng.bits(code.l()))?;
        let x: Vec<f64> = cw.iter().map(|&b| bpsk_symbol(b)).collect();
        channel.transmit_into(&x, row, &mut rng);
    }
    for _ in 0..warmup {
        decoder.decode_rows(&y, n, &channel)?;
    }
    let mut per_word: Vec<f64> = (0..repetitions)
        .map(|_| {
            let start = Instant::now();
            decoder.decode_rows(&y, n, &channel)?;
            Ok(start.elapsed().as_secs_f64() * 1e3 / batch as f64)
        })
        .collect::<Result<_>>()?;
    per_word.sort_by(f64::total_cmp);
    let mean_ms = per_word.iter().sum::<f64>() / repetitions as f64;
    let median_ms = if repetitions % 2 == 1 {
        per_word[repetitions / 2]
    } else {
        (per_word[repetitions / 2 - 1] + per_word[repetitions / 2]) / 2.0
    };
    // nearest rank
    let p99_ms = per_word[((0.99 * repetitions as f64).ceil() as usize).clamp(1, repetitions) - 1];
    Ok(LatencyRow {
        decoder: decoder.name().to_string(),
        n,
        batch,
        mean_ms,
        median_ms,
        p99_ms,
        repetitions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Code family; its blocklength is replaced by each entry of `n_list`.
    pub code: CodeConfig,
    pub n_list: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    pub kernel_size: usize,
    pub widths: Vec<usize>,
    pub warmup: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            code: CodeConfig::default(),
            n_list: vec![100, 200, 1000],
            batch_sizes: vec![1, 256],
            kernel_size: 24,
            widths: vec![10, 50, 50],
            warmup: 10,
            repetitions: 100,
            seed: 0,
        }
    }
}

/// CNN decode latency for each blocklength and batch size. Weights are freshly
/// initialized: inference cost does not depend on their values.
pub fn bench_latency(cfg: &BenchConfig) -> Result<LatencyReport> {
    if cfg.n_list.is_empty() || cfg.batch_sizes.is_empty() {
        return Err(Error::invalid("blocklength and batch-size lists must be non-empty"));
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let code = cfg.code.clone().with_n(n).build()?;
        let arch = CnnConfig::new(n, code.l(), cfg.kernel_size, cfg.widths.clone());
        let mut rng = RandomStream::derived(cfg.seed, &[LATENCY_STREAM, n as u64, 0]);
        let mut model = CnnDecoder::<f32>::new(arch, &mut rng)?;
        model.set_mode(Mode::Infer);
        let decoder = CnnBlockDecoder(model);
        for &batch in &cfg.batch_sizes {
            rows.push(time_decoder(&decoder, &code, batch, cfg.warmup, cfg.repetitions, cfg.seed)?);
        }
    }
    Ok(LatencyReport { rows })
}
