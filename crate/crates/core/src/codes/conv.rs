//! Feed-forward (non-recursive) convolutional codes.
//!
//! Generator polynomials use the usual octal notation: the most significant
//! tap of a `memory + 1` bit mask multiplies the current input bit and the
//! least significant tap the oldest register bit. With `(5, 7)` and register
//! `(s1, s2)` the outputs are `u ^ s2` and `u ^ s1 ^ s2`.
//!
//! A state is the register content read as an integer with `s1` in the most
//! significant position, so shifting in `u` maps state `s` to
//! `(u << (memory - 1)) | (s >> 1)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_binary, Codeword};
use crate::error::{check_len, Error, Result};

const MAX_MEMORY: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// `memory` zero bits are appended so the encoder ends in state 0.
    #[default]
    ZeroTail,
    /// The register is left wherever the message drives it.
    Truncated,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::ZeroTail => "zero-tail",
            Termination::Truncated => "truncated",
        })
    }
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-tail" | "zt" => Ok(Termination::ZeroTail),
            "truncated" | "trunc" => Ok(Termination::Truncated),
            _ => Err(Error::invalid(format!(
                "unknown termination {s:?} (expected zero-tail or truncated)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvCodeSpec {
    generators: Vec<u32>,
    memory: usize,
    termination: Termination,
}

impl ConvCodeSpec {
    pub fn new(generators: Vec<u32>, memory: usize, termination: Termination) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::invalid("at least one generator polynomial is required"));
        }
        if memory > MAX_MEMORY {
            return Err(Error::invalid(format!(
                "memory {memory} exceeds the supported maximum {MAX_MEMORY}"
            )));
        }
        for &g in &generators {
            if g == 0 {
                return Err(Error::invalid("generator polynomial must be nonzero"));
            }
            if (g as u64) >> (memory + 1) != 0 {
                return Err(Error::invalid(format!(
                    "generator {g:o} does not fit in {} taps",
                    memory + 1
                )));
            }
        }
        Ok(Self {
            generators,
            memory,
            termination,
        })
    }

    /// Parses comma-separated octal generators such as `"5,7"`; the memory is
    /// inferred from the widest polynomial.
    pub fn from_octal(polys: &str, termination: Termination) -> Result<Self> {
        let generators = polys
            .split(',')
            .map(|p| {
                u32::from_str_radix(p.trim(), 8)
                    .map_err(|_| Error::invalid(format!("bad octal polynomial {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let width = generators
            .iter()
            .map(|g| 32 - g.leading_zeros() as usize)
            .max()
            .unwrap_or(0);
        Self::new(generators, width.saturating_sub(1), termination)
    }

    /// The `(5, 7)` code with zero-tail termination.
    pub fn standard_5_7() -> Self {
        Self::new(vec![0o5, 0o7], 2, Termination::ZeroTail).expect("valid built-in code")
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn rate_inverse(&self) -> usize {
        self.generators.len()
    }

    pub fn octal_string(&self) -> String {
        self.generators
            .iter()
            .map(|g| format!("{g:o}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Message length that produces exactly `n` coded bits.
    pub fn message_len(&self, n: usize) -> Result<usize> {
        let r = self.rate_inverse();
        if n == 0 || n % r != 0 {
            return Err(Error::invalid(format!(
                "blocklength {n} is not a positive multiple of {r}"
            )));
        }
        let steps = n / r;
        let l = match self.termination {
            Termination::ZeroTail => steps.checked_sub(self.memory).unwrap_or(0),
            Termination::Truncated => steps,
        };
        if l == 0 {
            return Err(Error::invalid(format!(
                "blocklength {n} leaves no room for message bits"
            )));
        }
        Ok(l)
    }

    /// Number of coded bits produced for an `l`-bit message.
    pub fn codeword_len(&self, l: usize) -> usize {
        let steps = match self.termination {
            Termination::ZeroTail => l + self.memory,
            Termination::Truncated => l,
        };
        steps * self.rate_inverse()
    }
}

/// Transition table of a feed-forward encoder.
#[derive(Clone, Debug)]
pub struct Trellis {
    memory: usize,
    rate_inverse: usize,
    next: Vec<[u32; 2]>,
    /// Packed output bits; bit `j` is the output of generator `j`.
    output: Vec<[u32; 2]>,
    /// Incoming `(previous state, input bit)` pairs, ordered by input bit then state.
    incoming: Vec<Vec<(u32, u8)>>,
}

impl Trellis {
    pub fn num_states(&self) -> usize {
        self.next.len()
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn rate_inverse(&self) -> usize {
        self.rate_inverse
    }

    pub fn next_state(&self, state: usize, input: u8) -> usize {
        self.next[state][input as usize] as usize
    }

    pub fn output(&self, state: usize, input: u8) -> u32 {
        self.output[state][input as usize]
    }

    /// Output bits of one branch, generator order.
    pub fn output_bits(&self, state: usize, input: u8) -> Vec<u8> {
        let packed = self.output(state, input);
        (0..self.rate_inverse).map(|j| ((packed >> j) & 1) as u8).collect()
    }

    pub fn incoming(&self, state: usize) -> &[(u32, u8)] {
        &self.incoming[state]
    }
}

pub fn build_trellis(spec: &ConvCodeSpec) -> Trellis {
    let m = spec.memory;
    let num_states = 1usize << m;
    let mut next = Vec::with_capacity(num_states);
    let mut output = Vec::with_capacity(num_states);
    for state in 0..num_states {
        let mut nx = [0u32; 2];
        let mut out = [0u32; 2];
        for u in 0..2usize {
            let register = ((u << m) | state) as u32;
            nx[u] = (register >> 1) as u32;
            out[u] = spec
                .generators
                .iter()
                .enumerate()
                .map(|(j, &g)| ((register & g).count_ones() & 1) << j)
                .fold(0, |acc, b| acc | b);
        }
        next.push(nx);
        output.push(out);
    }
    let mut incoming = vec![Vec::with_capacity(2); num_states];
    for u in 0..2u8 {
        for (state, nx) in next.iter().enumerate() {
            incoming[nx[u as usize] as usize].push((state as u32, u));
        }
    }
    Trellis {
        memory: m,
        rate_inverse: spec.rate_inverse(),
        next,
        output,
        incoming,
    }
}

/// Encodes `msg` of any positive length, appending the tail for zero-tail codes.
pub fn conv_encode(msg: &[u8], spec: &ConvCodeSpec) -> Result<Codeword> {
    if msg.is_empty() {
        return Err(Error::invalid("empty message"));
    }
    check_binary(msg)?;
    let trellis = build_trellis(spec);
    Ok(encode_with(&trellis, spec, msg))
}

fn encode_with(trellis: &Trellis, spec: &ConvCodeSpec, msg: &[u8]) -> Codeword {
    let tail = match spec.termination {
        Termination::ZeroTail => spec.memory,
        Termination::Truncated => 0,
    };
    let r = spec.rate_inverse();
    let mut out = Vec::with_capacity((msg.len() + tail) * r);
    let mut state = 0usize;
    for &u in msg.iter().chain(std::iter::repeat_n(&0u8, tail)) {
        let packed = trellis.output(state, u);
        out.extend((0..r).map(|j| ((packed >> j) & 1) as u8));
        state = trellis.next_state(state, u);
    }
    Codeword(out)
}

/// A convolutional code bound to a blocklength.
#[derive(Clone, Debug)]
pub struct ConvCode {
    spec: ConvCodeSpec,
    trellis: Trellis,
    n: usize,
    l: usize,
}

impl ConvCode {
    pub fn new(spec: ConvCodeSpec, n: usize) -> Result<Self> {
        let l = spec.message_len(n)?;
        let trellis = build_trellis(&spec);
        Ok(Self { spec, trellis, n, l })
    }

    pub fn spec(&self) -> &ConvCodeSpec {
        &self.spec
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Number of trellis steps in one block.
    pub fn steps(&self) -> usize {
        self.n / self.spec.rate_inverse()
    }

    pub fn encode(&self, msg: &[u8]) -> Result<Codeword> {
        check_len(self.l, msg.len())?;
        check_binary(msg)?;
        Ok(encode_with(&self.trellis, &self.spec, msg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truncated_5_7() -> ConvCodeSpec {
        ConvCodeSpec::standard_5_7().with_termination(Termination::Truncated)
    }

    #[test]
    fn hand_traced_codeword() {
        let cw = conv_encode(&[1, 1, 0, 1], &truncated_5_7()).unwrap();
        assert_eq!(cw.0, vec![1, 1, 1, 0, 1, 0, 0, 0]);
    }

    #[test]
    fn all_zero_message() {
        let cw = conv_encode(&[0; 4], &ConvCodeSpec::standard_5_7()).unwrap();
        assert_eq!(cw.0, vec![0; 12]);
    }

    #[test]
    fn impulse_response_interleaves_generators() {
        // 1 + D^2 and 1 + D + D^2
        let cw = conv_encode(&[1, 0, 0, 0, 0], &truncated_5_7()).unwrap();
        assert_eq!(cw.0, vec![1, 1, 0, 1, 1, 1, 0, 0, 0, 0]);
    }

    #[test]
    fn trellis_for_5_7() {
        let t = build_trellis(&ConvCodeSpec::standard_5_7());
        assert_eq!(t.num_states(), 4);
        assert_eq!(t.next_state(0b00, 1), 0b10);
        assert_eq!(t.output_bits(0b00, 1), vec![1, 1]);
        for s in 0..4 {
            assert_eq!(t.incoming(s).len(), 2);
        }
    }

    #[test]
    fn degenerate_memory_zero_is_repetition() {
        let spec = ConvCodeSpec::from_octal("1,1", Termination::ZeroTail).unwrap();
        assert_eq!(spec.memory(), 0);
        let t = build_trellis(&spec);
        assert_eq!(t.num_states(), 1);
        assert_eq!(t.output_bits(0, 0), vec![0, 0]);
        assert_eq!(t.output_bits(0, 1), vec![1, 1]);
    }

    #[test]
    fn zero_tail_returns_to_zero_state() {
        let spec = ConvCodeSpec::standard_5_7();
        let code = ConvCode::new(spec.clone(), 100).unwrap();
        assert_eq!(code.l(), 48);
        let msg: Vec<u8> = (0..48).map(|i| ((i * 7 + 3) % 5 == 0) as u8).collect();
        let cw = code.encode(&msg).unwrap();
        assert_eq!(cw.len(), 100);
        let t = code.trellis();
        let mut state = 0;
        for &u in msg.iter().chain([0, 0].iter()) {
            state = t.next_state(state, u);
        }
        assert_eq!(state, 0);
    }

    #[test]
    fn blocklength_policy() {
        let zt = ConvCodeSpec::standard_5_7();
        assert_eq!(zt.message_len(200).unwrap(), 98);
        assert_eq!(truncated_5_7().message_len(200).unwrap(), 100);
        assert!(zt.message_len(101).is_err());
        assert!(zt.message_len(4).is_err());
        let code = ConvCode::new(zt, 20).unwrap();
        assert!(matches!(
            code.encode(&[0; 5]),
            Err(Error::LengthMismatch { expected: 8, actual: 5 })
        ));
    }

    #[test]
    fn rejects_polynomials_wider_than_memory() {
        assert!(ConvCodeSpec::new(vec![0o5, 0o17], 2, Termination::ZeroTail).is_err());
        assert!(ConvCodeSpec::from_octal("5,9", Termination::ZeroTail).is_err());
        assert!(ConvCodeSpec::new(vec![0o5, 0o7], 17, Termination::ZeroTail).is_err());
    }
}
