//! Exhaustive MAP decoding for small codes.

use crate::channel::{bpsk_modulate, SymbolVector};
use crate::codes::{Code, MessageWord};
use crate::error::{Error, Result};

pub const MAX_ENUMERABLE_BITS: usize = 16;

/// All `(message, symbols)` pairs of `code`. Message index `i` has bit `j`
/// equal to bit `j` of `i`.
pub fn enumerate_codebook(code: &Code) -> Result<Vec<(MessageWord, SymbolVector)>> {
    let l = code.l();
    if l > MAX_ENUMERABLE_BITS {
        return Err(Error::Refused(format!(
            "codebook of 2^{l} words is too large to enumerate (limit 2^{MAX_ENUMERABLE_BITS})"
        )));
    }
    (0..1usize << l)
        .map(|i| {
            let msg: Vec<u8> = (0..l).map(|j| ((i >> j) & 1) as u8).collect();
            let cw = code.encode(&msg)?;
            Ok((MessageWord(msg), bpsk_modulate(&cw)))
        })
        .collect()
}

/// `argmin ‖y − b(m)‖²` over the codebook, which is the MAP rule for uniform
/// messages on AWGN. Ties go to the earliest codebook entry.
pub fn map_bruteforce(y: &[f64], codebook: &[(MessageWord, SymbolVector)]) -> Result<MessageWord> {
    if codebook.len() > 1 << MAX_ENUMERABLE_BITS {
        return Err(Error::Refused(format!(
            "codebook with {} entries exceeds the enumeration limit",
            codebook.len()
        )));
    }
    let mut best: Option<(f64, &MessageWord)> = None;
    for (msg, b) in codebook {
        if b.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: b.len(),
                actual: y.len(),
            });
        }
        let d: f64 = y.iter().zip(b.iter()).map(|(y, b)| (y - b) * (y - b)).sum();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, msg));
        }
    }
    best.map(|(_, m)| m.clone())
        .ok_or_else(|| Error::invalid("empty codebook"))
}
