//! Viterbi decoding over the code trellis.
//!
//! Ties in the add-compare-select step keep the first incoming branch in
//! trellis order (input 0 before input 1, then lower predecessor state), and
//! truncated blocks end in the lowest-index state among the best metrics.

use crate::channel::bpsk_symbol;
use crate::codes::{ConvCode, MessageWord, Termination};
use crate::error::{check_len, Result};

/// Maximum-likelihood decoding under the Hamming metric on hard bits.
pub fn viterbi_hard(bits: &[u8], code: &ConvCode) -> Result<MessageWord> {
    check_len(code.n(), bits.len())?;
    let r = code.spec().rate_inverse();
    Ok(decode(code, |step, out| {
        let rx = &bits[step * r..(step + 1) * r];
        rx.iter()
            .enumerate()
            .filter(|&(j, &b)| u32::from(b & 1) != (out >> j) & 1)
            .count() as f64
    }))
}

/// Maximum-likelihood decoding under squared Euclidean distance to ±1 symbols.
pub fn viterbi_soft(y: &[f64], code: &ConvCode) -> Result<MessageWord> {
    check_len(code.n(), y.len())?;
    let r = code.spec().rate_inverse();
    Ok(decode(code, |step, out| {
        let rx = &y[step * r..(step + 1) * r];
        rx.iter()
            .enumerate()
            .map(|(j, &v)| {
                let d = v - bpsk_symbol(((out >> j) & 1) as u8);
                d * d
            })
            .sum()
    }))
}

fn decode(code: &ConvCode, branch_metric: impl Fn(usize, u32) -> f64) -> MessageWord {
    let trellis = code.trellis();
    let states = trellis.num_states();
    let steps = code.steps();
    let outputs = 1usize << trellis.rate_inverse();

    let mut metric = vec![f64::INFINITY; states];
    metric[0] = 0.0;
    let mut next = vec![0.0; states];
    let mut branch = vec![0.0; outputs];
    // decisions[step * states + s]: index into trellis.incoming(s)
    let mut decisions = vec![0u8; steps * states];

    for step in 0..steps {
        for (out, b) in branch.iter_mut().enumerate() {
            *b = branch_metric(step, out as u32);
        }
        for s in 0..states {
            let mut best = f64::INFINITY;
            let mut choice = 0u8;
            for (k, &(prev, u)) in trellis.incoming(s).iter().enumerate() {
                let cand = metric[prev as usize] + branch[trellis.output(prev as usize, u) as usize];
                if cand < best {
                    best = cand;
                    choice = k as u8;
                }
            }
            next[s] = best;
            decisions[step * states + s] = choice;
        }
        std::mem::swap(&mut metric, &mut next);
    }

    let mut state = match code.spec().termination() {
        Termination::ZeroTail => 0,
        Termination::Truncated => {
            let mut best = 0;
            for s in 1..states {
                if metric[s] < metric[best] {
                    best = s;
                }
            }
            best
        }
    };
    let mut inputs = vec![0u8; steps];
    for step in (0..steps).rev() {
        let (prev, u) = trellis.incoming(state)[decisions[step * states + state] as usize];
        inputs[step] = u;
        state = prev as usize;
    }
    inputs.truncate(code.l());
    MessageWord(inputs)
}
