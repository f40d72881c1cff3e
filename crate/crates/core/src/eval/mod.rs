//! Monte-Carlo error-rate evaluation, hyperparameter sweeps and latency
//! benchmarks.
//!
//! Blocks are simulated in fixed-size chunks. Chunk `c` at grid point `p`
//! draws from its own stream `(seed, p, c)` and chunks are tallied in index
//! order, so the report does not depend on how many workers ran them.

mod decoders;
mod latency;
mod report;
mod sweep;

pub use decoders::{
    decoder_by_name, BeliefPropagation, BitFlip, CnnBlockDecoder, Decoder, HardViterbi, MapOracle, SoftViterbi,
    UncodedDecoder, DECODER_NAMES,
};
pub use latency::{bench_latency, time_decoder, BenchConfig, LatencyReport, LatencyRow, LATENCY_HEADER};
pub(crate) use report::write_comments;
pub use report::{read_comments, wilson_interval, EvalPoint, EvalReport, EVAL_HEADER, Z95};
pub use sweep::{sweep_hyperparams, sweep_with, write_loss_csv, SweepPoint, SweepResult};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{bpsk_symbol, ChannelKind, ChannelModel, RandomStream};
use crate::codes::Code;
use crate::error::{Error, Result};

const EVAL_STREAM: u64 = 3;

/// When to stop simulating one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    pub min_blocks: u64,
    /// Every decoder must reach this many block errors.
    pub min_block_errors: u64,
    /// Hard cap on blocks, whatever the error counts.
    pub max_blocks: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_blocks: 10_000,
            min_block_errors: 100,
            max_blocks: 1_000_000,
        }
    }
}

impl StopRule {
    /// Exactly `blocks` blocks.
    pub fn fixed(blocks: u64) -> Self {
        Self {
            min_blocks: blocks,
            min_block_errors: 0,
            max_blocks: blocks,
        }
    }

    fn done(&self, blocks: u64, fewest_block_errors: u64) -> bool {
        blocks >= self.max_blocks || (blocks >= self.min_blocks && fewest_block_errors >= self.min_block_errors)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub channel: ChannelKind,
    pub snr_grid: Vec<f64>,
    pub stop: StopRule,
    pub seed: u64,
    /// Parallel workers; 0 means one per available core.
    pub workers: usize,
    pub chunk_blocks: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            channel: ChannelKind::Awgn,
            snr_grid: (0..=6).map(f64::from).collect(),
            stop: StopRule::default(),
            seed: 0,
            workers: 0,
            chunk_blocks: 1000,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_grid.is_empty() {
            return Err(Error::invalid("SNR grid is empty"));
        }
        if self.snr_grid.iter().any(|s| s.is_nan()) {
            return Err(Error::invalid("SNR grid contains NaN"));
        }
        if self.chunk_blocks == 0 || self.stop.max_blocks == 0 {
            return Err(Error::invalid("chunk size and block cap must be positive"));
        }
        if self.stop.min_blocks > self.stop.max_blocks {
            return Err(Error::invalid("min_blocks exceeds max_blocks"));
        }
        self.channel.validate()
    }
}

/// Per-decoder `(bit errors, block errors)` for one chunk.
type Tally = Vec<(u64, u64)>;

fn simulate_chunk(
    decoders: &[&dyn Decoder],
    code: &Code,
    channel: &ChannelModel,
    blocks: usize,
    mut rng: RandomStream,
) -> Result<Tally> {
    let (n, l) = (code.n(), code.l());
    let mut messages = Vec::with_capacity(blocks * l);
    let mut y = vec![0.0; blocks * n];
    let mut symbols = vec![0.0; n];
    for row in y.chunks_mut(n) {
        let msg = rng.bits(l);
        let cw = code.encode(&msg)?;
        for (s, &b) in symbols.iter_mut().zip(cw.iter()) {
            *s = bpsk_symbol(b);
        }
        channel.transmit_into(&symbols, row, &mut rng);
        messages.extend_from_slice(&msg);
    }
    decoders
        .iter()
        .map(|d| {
            let est = d.decode_rows(&y, n, channel)?;
            if est.len() != messages.len() {
                return Err(Error::LengthMismatch {
                    expected: messages.len(),
                    actual: est.len(),
                });
            }
            Ok(count_errors(&messages, &est, l))
        })
        .collect()
}

/// `(bit errors, block errors)` between row-major message matrices.
pub fn count_errors(sent: &[u8], decoded: &[u8], l: usize) -> (u64, u64) {
    let mut bits = 0;
    let mut blocks = 0;
    for (a, b) in sent.chunks(l).zip(decoded.chunks(l)) {
        let e = a.iter().zip(b).filter(|(x, y)| x != y).count() as u64;
        bits += e;
        blocks += (e > 0) as u64;
    }
    (bits, blocks)
}

/// Simulates every decoder on the same received blocks at each SNR.
pub fn evaluate(decoders: &[&dyn Decoder], code: &Code, cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    if decoders.is_empty() {
        return Err(Error::invalid("no decoders to evaluate"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let wave = pool.current_num_threads().max(1) as u64;
    let template = |name: &str, snr_db: f64| EvalPoint {
        decoder: name.to_string(),
        code: code.descriptor(),
        n: code.n(),
        l: code.l(),
        snr_db,
        alpha: cfg.channel.alpha(),
        blocks: 0,
        bit_errors: 0,
        block_errors: 0,
        seed: cfg.seed,
    };

    let mut by_decoder: Vec<Vec<EvalPoint>> = vec![Vec::new(); decoders.len()];
    for (p, &snr) in cfg.snr_grid.iter().enumerate() {
        let channel = cfg.channel.at(snr);
        channel.validate()?;
        let mut points: Vec<EvalPoint> = decoders.iter().map(|d| template(d.name(), snr)).collect();
        let chunk_size = |c: u64| cfg.chunk_blocks.min(cfg.stop.max_blocks - c * cfg.chunk_blocks);
        let total_chunks = cfg.stop.max_blocks.div_ceil(cfg.chunk_blocks);
        let mut next = 0u64;
        'grid_point: while next < total_chunks {
            let batch: Vec<u64> = (next..(next + wave).min(total_chunks)).collect();
            let tallies: Vec<Result<Tally>> = pool.install(|| {
                batch
                    .par_iter()
                    .map(|&c| {
                        let rng = RandomStream::derived(cfg.seed, &[EVAL_STREAM, p as u64, c]);
                        simulate_chunk(decoders, code, &channel, chunk_size(c) as usize, rng)
                    })
                    .collect()
            });
            for (&c, tally) in batch.iter().zip(tallies) {
                for (point, (bits, blocks)) in points.iter_mut().zip(tally?) {
                    point.absorb(chunk_size(c), bits, blocks);
                }
                next = c + 1;
                let fewest = points.iter().map(|q| q.block_errors).min().unwrap_or(0);
                if cfg.stop.done(points[0].blocks, fewest) {
                    break 'grid_point;
                }
            }
        }
        for (list, point) in by_decoder.iter_mut().zip(points) {
            list.push(point);
        }
    }
    Ok(EvalReport {
        points: by_decoder.into_iter().flatten().collect(),
    })
}

/// `lower ≤ upper` comparison that only fails when the intervals separate:
/// true unless `a` is worse than `b` beyond both 95% intervals.
pub fn not_worse_beyond_ci(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    let (a_rate, a_lo, _) = a;
    let (b_rate, _, b_hi) = b;
    a_rate <= b_rate || a_lo <= b_hi
}

/// True when `a`'s interval lies entirely below `b`'s.
pub fn better_beyond_ci(a: (f64, f64), b: (f64, f64)) -> bool {
    a.1 < b.0
}
