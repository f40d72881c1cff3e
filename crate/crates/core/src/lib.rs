//! Channel-coding simulation toolkit.
//!
//! The crate bundles everything needed to compare a small convolutional
//! neural-network decoder against classical decoders on BPSK links:
//!
//! - [`codes`]: the rate-1/2 feed-forward convolutional code and regular LDPC codes,
//! - [`channel`]: BPSK mapping, AWGN and i.i.d. outage channels over seedable streams,
//! - [`classical`]: Viterbi (hard and unquantized), brute-force MAP, bit flipping and
//!   log-domain belief propagation,
//! - [`neural`]: a from-scratch 1-D CNN (convolution, batch norm, ReLU, dense sigmoid)
//!   with exact backward passes, MSE loss and Adam,
//! - [`mist`]: mixed-SNR training on freshly sampled batches plus checkpoint I/O,
//! - [`eval`]: Monte-Carlo BER/BLER estimation, hyperparameter sweeps and latency benches.

pub mod channel;
pub mod classical;
pub mod codes;
pub mod error;
pub mod eval;
pub mod mist;
pub mod neural;

pub use error::{Error, Result};
