//! Gallager-style parallel bit flipping on hard decisions.

use super::IterativeOutcome;
use crate::codes::LdpcCode;
use crate::error::{check_len, Result};

/// Unsatisfied-check count at which a bit is flipped: a strict majority of its checks.
pub fn flip_threshold(dv: usize) -> usize {
    dv / 2 + 1
}

/// Each round flips every bit with at least [`flip_threshold`] unsatisfied
/// checks. Stops on a zero syndrome, after `max_iter` rounds, or when no bit
/// qualifies.
pub fn bit_flip_decode(bits: &[u8], code: &LdpcCode, max_iter: usize) -> Result<IterativeOutcome> {
    check_len(code.n(), bits.len())?;
    let h = code.h();
    let threshold = flip_threshold(code.dv());
    let mut word: Vec<u8> = bits.iter().map(|b| b & 1).collect();
    let mut unsatisfied = vec![0u8; h.rows()];
    let mut iterations = 0;
    let converged = loop {
        let mut any = false;
        for (r, s) in unsatisfied.iter_mut().enumerate() {
            *s = h.row(r).iter().fold(0, |acc, &c| acc ^ word[c]);
            any |= *s == 1;
        }
        if !any {
            break true;
        }
        if iterations == max_iter {
            break false;
        }
        let flips: Vec<usize> = (0..code.n())
            .filter(|&v| {
                h.col(v).iter().filter(|&&r| unsatisfied[r] == 1).count() >= threshold
            })
            .collect();
        if flips.is_empty() {
            break false;
        }
        for v in flips {
            word[v] ^= 1;
        }
        iterations += 1;
    };
    Ok(IterativeOutcome {
        message: code.extract_message(&word),
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RandomStream;
    use crate::codes::ldpc_generate;

    #[test]
    fn thresholds() {
        assert_eq!(flip_threshold(3), 2);
        assert_eq!(flip_threshold(10), 6);
    }

    #[test]
    fn valid_codeword_is_untouched() {
        let code = ldpc_generate(20, 3, 6, 1).unwrap();
        let msg = RandomStream::new(1, 1).bits(10);
        let cw = code.encode(&msg).unwrap();
        let out = bit_flip_decode(&cw, &code, 50).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.message.0, msg);
    }

    #[test]
    fn single_error_corrected_in_one_round() {
        let code = ldpc_generate(200, 3, 6, 7).unwrap();
        assert_eq!(code.four_cycles(), 0);
        let mut rng = RandomStream::new(2, 0);
        for pos in (0..200).step_by(13) {
            let msg = rng.bits(100);
            let mut cw = code.encode(&msg).unwrap().0;
            cw[pos] ^= 1;
            let out = bit_flip_decode(&cw, &code, 50).unwrap();
            assert!(out.converged);
            assert_eq!(out.iterations, 1);
            assert_eq!(out.message.0, msg);
        }
    }

    #[test]
    fn rejects_wrong_length() {
        let code = ldpc_generate(20, 3, 6, 1).unwrap();
        assert!(bit_flip_decode(&[0; 21], &code, 5).is_err());
    }
}
