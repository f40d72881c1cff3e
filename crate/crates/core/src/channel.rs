//! BPSK modulation and noisy channels.
//!
//! SNRs are given in dB everywhere and mean symbol energy (fixed at 1) over
//! per-dimension noise variance, so `σ² = 10^(−snr_db/10)`. An SNR of `+∞`
//! is the noiseless channel.
//!
//! Randomness comes from [`RandomStream`]: ChaCha8 keyed by a 64-bit seed
//! with a 64-bit stream id. The same `(seed, stream)` pair always yields the
//! same sequence, so workers that own distinct stream ids produce results
//! that do not depend on scheduling.

use std::ops::Deref;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise level during an outage, in dB.
pub const DEFAULT_OUTAGE_SNR_DB: f64 = -10.0;

#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed, stream }
    }

    /// Stream for a position in a hierarchy of indices (e.g. SNR point, chunk).
    pub fn derived(seed: u64, path: &[u64]) -> Self {
        Self::new(seed, stream_id(path))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn bit(&mut self) -> u8 {
        (self.rng.next_u32() & 1) as u8
    }

    pub fn bits(&mut self, len: usize) -> Vec<u8> {
        (0..len).map(|_| self.bit()).collect()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.rng.random_range(0..len)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Mixes a path of indices into a single stream id (splitmix64 finalizer).
pub fn stream_id(path: &[u64]) -> u64 {
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for &p in path {
        h ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = splitmix(h);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// BPSK symbols, each ±1.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolVector(pub Vec<f64>);

/// Channel output samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedVector(pub Vec<f64>);

impl Deref for SymbolVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for ReceivedVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub fn bpsk_symbol(bit: u8) -> f64 {
    if bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bit 0 → +1, bit 1 → −1.
pub fn bpsk_modulate(bits: &[u8]) -> SymbolVector {
    SymbolVector(bits.iter().map(|&b| bpsk_symbol(b)).collect())
}

pub fn snr_db_to_noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn awgn_transmit(b: &SymbolVector, snr_db: f64, rng: &mut RandomStream) -> ReceivedVector {
    let sigma = snr_db_to_noise_variance(snr_db).sqrt();
    ReceivedVector(b.iter().map(|&s| s + noise(sigma, rng)).collect())
}

#[inline]
fn noise(sigma: f64, rng: &mut RandomStream) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * rng.gaussian()
    }
}

/// Transmits over an outage channel, also returning the outage mask
/// (1 = symbol was in outage). The mask is a diagnostic; decoders never see it.
pub fn outage_transmit(
    b: &SymbolVector,
    model: &ChannelModel,
    rng: &mut RandomStream,
) -> Result<(ReceivedVector, Vec<u8>)> {
    let ChannelModel::Outage {
        nominal_snr_db,
        alpha,
        outage_snr_db,
    } = *model
    else {
        return Err(Error::invalid("outage_transmit requires an outage channel"));
    };
    model.validate()?;
    let mut y = vec![0.0; b.len()];
    let mut mask = vec![0u8; b.len()];
    outage_into(b, nominal_snr_db, alpha, outage_snr_db, &mut y, Some(&mut mask), rng);
    Ok((ReceivedVector(y), mask))
}

fn outage_into(
    b: &[f64],
    nominal_snr_db: f64,
    alpha: f64,
    outage_snr_db: f64,
    out: &mut [f64],
    mut mask: Option<&mut [u8]>,
    rng: &mut RandomStream,
) {
    let nominal = snr_db_to_noise_variance(nominal_snr_db).sqrt();
    let outage = snr_db_to_noise_variance(outage_snr_db).sqrt();
    for (i, (&s, y)) in b.iter().zip(out.iter_mut()).enumerate() {
        let hit = rng.uniform() < alpha;
        if let Some(m) = mask.as_deref_mut() {
            m[i] = hit as u8;
        }
        *y = s + noise(if hit { outage } else { nominal }, rng);
    }
}

/// Bit 0 if the sample is ≥ 0, else 1.
pub fn hard_slice(y: &[f64]) -> Vec<u8> {
    y.iter().map(|&v| (v < 0.0) as u8).collect()
}

/// A channel with its operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelModel {
    Noiseless,
    Awgn {
        snr_db: f64,
    },
    Outage {
        nominal_snr_db: f64,
        alpha: f64,
        outage_snr_db: f64,
    },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::Noiseless => Ok(()),
            ChannelModel::Awgn { snr_db } => {
                if snr_db.is_nan() {
                    return Err(Error::invalid("SNR is NaN"));
                }
                Ok(())
            }
            ChannelModel::Outage {
                nominal_snr_db,
                alpha,
                outage_snr_db,
            } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::invalid(format!("outage probability {alpha} outside [0, 1]")));
                }
                if nominal_snr_db.is_nan() || outage_snr_db.is_nan() {
                    return Err(Error::invalid("SNR is NaN"));
                }
                if outage_snr_db > nominal_snr_db {
                    return Err(Error::invalid(format!(
                        "outage SNR {outage_snr_db} dB exceeds nominal {nominal_snr_db} dB"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Nominal operating SNR (`+∞` for the noiseless channel).
    pub fn snr_db(&self) -> f64 {
        match *self {
            ChannelModel::Noiseless => f64::INFINITY,
            ChannelModel::Awgn { snr_db } => snr_db,
            ChannelModel::Outage { nominal_snr_db, .. } => nominal_snr_db,
        }
    }

    pub fn transmit(&self, b: &SymbolVector, rng: &mut RandomStream) -> ReceivedVector {
        let mut y = vec![0.0; b.len()];
        self.transmit_into(b, &mut y, rng);
        ReceivedVector(y)
    }

    /// Writes `b + z` into `out` without allocating.
    pub fn transmit_into(&self, b: &[f64], out: &mut [f64], rng: &mut RandomStream) {
        assert_eq!(b.len(), out.len());
        match *self {
            ChannelModel::Noiseless => out.copy_from_slice(b),
            ChannelModel::Awgn { snr_db } => {
                let sigma = snr_db_to_noise_variance(snr_db).sqrt();
                for (y, &s) in out.iter_mut().zip(b) {
                    *y = s + noise(sigma, rng);
                }
            }
            ChannelModel::Outage {
                nominal_snr_db,
                alpha,
                outage_snr_db,
            } => outage_into(b, nominal_snr_db, alpha, outage_snr_db, out, None, rng),
        }
    }
}

/// A channel family without an operating point; SNR sweeps and mixed-SNR
/// training instantiate it per point via [`ChannelKind::at`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelKind {
    #[default]
    Awgn,
    Outage {
        alpha: f64,
        #[serde(default = "default_outage_snr")]
        outage_snr_db: f64,
    },
}

fn default_outage_snr() -> f64 {
    DEFAULT_OUTAGE_SNR_DB
}

impl ChannelKind {
    pub fn at(&self, snr_db: f64) -> ChannelModel {
        match *self {
            ChannelKind::Awgn if snr_db == f64::INFINITY => ChannelModel::Noiseless,
            ChannelKind::Awgn => ChannelModel::Awgn { snr_db },
            ChannelKind::Outage {
                alpha,
                outage_snr_db,
            } => ChannelModel::Outage {
                nominal_snr_db: snr_db,
                alpha,
                outage_snr_db,
            },
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            ChannelKind::Awgn => 0.0,
            ChannelKind::Outage { alpha, .. } => alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelKind::Awgn => Ok(()),
            ChannelKind::Outage { outage_snr_db, .. } => self.at(outage_snr_db).validate(),
        }
    }
}
