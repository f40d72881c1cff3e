//! Reference decoders.
//!
//! LLRs are `log P(bit = 0 | y) / P(bit = 1 | y)`, so a positive value favors 0.

mod bitflip;
mod bp;
mod map;
mod viterbi;

use std::ops::Deref;

use crate::channel::snr_db_to_noise_variance;
use crate::codes::MessageWord;

pub use bitflip::{bit_flip_decode, flip_threshold};
pub use bp::bp_decode;
pub use map::{enumerate_codebook, map_bruteforce, MAX_ENUMERABLE_BITS};
pub use viterbi::{viterbi_hard, viterbi_soft};

/// LLR magnitudes are clamped here so tanh-domain arithmetic stays away from ±1.
pub const LLR_MAX: f64 = 30.0;

pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct LlrVector(pub Vec<f64>);

impl Deref for LlrVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `2y/σ²` per sample, clamped to `±LLR_MAX`.
pub fn llr_from_awgn(y: &[f64], snr_db: f64) -> LlrVector {
    let var = snr_db_to_noise_variance(snr_db);
    LlrVector(
        y.iter()
            .map(|&v| {
                if v == 0.0 {
                    0.0
                } else if var == 0.0 {
                    LLR_MAX.copysign(v)
                } else {
                    (2.0 * v / var).clamp(-LLR_MAX, LLR_MAX)
                }
            })
            .collect(),
    )
}

/// Result of an iterative decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct IterativeOutcome {
    pub message: MessageWord,
    pub converged: bool,
    pub iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awgn_llr_values() {
        assert_eq!(llr_from_awgn(&[1.0], 0.0).0, vec![2.0]);
        assert_eq!(llr_from_awgn(&[0.0], 3.0).0, vec![0.0]);
        let v = llr_from_awgn(&[-0.5], 3.0).0[0];
        assert!((v - (-1.0 / 10f64.powf(-0.3))).abs() < 1e-12);
        assert!((v + 1.9953).abs() < 1e-4);
        assert_eq!(llr_from_awgn(&[5.0, -5.0], 20.0).0, vec![LLR_MAX, -LLR_MAX]);
        assert_eq!(llr_from_awgn(&[0.1], f64::INFINITY).0, vec![LLR_MAX]);
    }
}
