//! Log-domain sum-product decoding with a flooding schedule.

use super::{IterativeOutcome, LLR_MAX};
use crate::codes::LdpcCode;
use crate::error::{check_len, Error, Result};

const TANH_LIMIT: f64 = 1.0 - 1e-15;

/// Decodes channel LLRs (positive favors 0).
///
/// Stops as soon as the hard decision on the posterior LLRs satisfies every
/// check and no posterior is exactly zero; the channel LLRs alone are tested
/// before the first iteration. An undecided (zero) posterior is sliced to 0.
pub fn bp_decode(llr: &[f64], code: &LdpcCode, max_iter: usize) -> Result<IterativeOutcome> {
    check_len(code.n(), llr.len())?;
    if let Some(i) = llr.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("channel LLR {i} is {}", llr[i])));
    }
    let h = code.h();
    let m = h.rows();
    let n = code.n();

    // Edges are numbered check-major.
    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0);
    for r in 0..m {
        offsets.push(offsets[r] + h.row(r).len());
    }
    let edges = offsets[m];
    let edge_var: Vec<usize> = (0..m).flat_map(|r| h.row(r).iter().copied()).collect();
    let mut var_edges = vec![Vec::new(); n];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v].push(e);
    }

    let prior: Vec<f64> = llr.iter().map(|v| v.clamp(-LLR_MAX, LLR_MAX)).collect();
    let mut v2c: Vec<f64> = edge_var.iter().map(|&v| prior[v]).collect();
    let mut c2v = vec![0.0; edges];
    let mut posterior = prior.clone();
    let mut decision = vec![0u8; n];
    let mut tanh_buf = Vec::new();
    let mut suffix = Vec::new();

    let mut iterations = 0;
    let converged = loop {
        let mut decided = true;
        for (d, &p) in decision.iter_mut().zip(&posterior) {
            *d = (p < 0.0) as u8;
            decided &= p != 0.0;
        }
        let satisfied = (0..m).all(|r| h.row(r).iter().fold(0, |acc, &c| acc ^ decision[c]) == 0);
        if decided && satisfied {
            break true;
        }
        if iterations == max_iter {
            break false;
        }
        iterations += 1;

        for r in 0..m {
            let span = offsets[r]..offsets[r + 1];
            let deg = span.len();
            tanh_buf.clear();
            tanh_buf.extend(v2c[span.clone()].iter().map(|&x| (0.5 * x).tanh()));
            suffix.clear();
            suffix.resize(deg + 1, 1.0);
            for k in (0..deg).rev() {
                suffix[k] = suffix[k + 1] * tanh_buf[k];
            }
            let mut prefix = 1.0;
            for k in 0..deg {
                let p = (prefix * suffix[k + 1]).clamp(-TANH_LIMIT, TANH_LIMIT);
                c2v[span.start + k] = (2.0 * p.atanh()).clamp(-LLR_MAX, LLR_MAX);
                prefix *= tanh_buf[k];
            }
        }
        for v in 0..n {
            let total = prior[v] + var_edges[v].iter().map(|&e| c2v[e]).sum::<f64>();
            posterior[v] = total;
            for &e in &var_edges[v] {
                v2c[e] = (total - c2v[e]).clamp(-LLR_MAX, LLR_MAX);
            }
        }
    };
    Ok(IterativeOutcome {
        message: code.extract_message(&decision),
        converged,
        iterations,
    })
}
