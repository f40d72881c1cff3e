//! Encoders and code descriptions.

mod alist;
mod conv;
pub mod gf2;
mod ldpc;

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub use alist::SparseBinary;
pub use conv::{build_trellis, conv_encode, ConvCode, ConvCodeSpec, Termination, Trellis};
pub use ldpc::{ldpc_generate, syndrome, LdpcCode, LdpcParams};

macro_rules! bit_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
        pub struct $name(pub Vec<u8>);

        impl $name {
            pub fn zeros(len: usize) -> Self {
                Self(vec![0; len])
            }

            pub fn into_inner(self) -> Vec<u8> {
                self.0
            }

            /// Elementwise XOR; both words must have the same length.
            pub fn xor(&self, other: &Self) -> Self {
                assert_eq!(self.len(), other.len(), "xor of unequal lengths");
                Self(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
            }

            pub fn weight(&self) -> usize {
                self.0.iter().filter(|&&b| b != 0).count()
            }
        }

        impl Deref for $name {
            type Target = [u8];

            fn deref(&self) -> &[u8] {
                &self.0
            }
        }

        impl From<Vec<u8>> for $name {
            fn from(bits: Vec<u8>) -> Self {
                Self(bits)
            }
        }

        impl From<&[u8]> for $name {
            fn from(bits: &[u8]) -> Self {
                Self(bits.to_vec())
            }
        }
    };
}

bit_vector!(
    /// An ℓ-bit dataword.
    MessageWord
);
bit_vector!(
    /// An n-bit codeword.
    Codeword
);

pub(crate) fn check_binary(bits: &[u8]) -> Result<()> {
    match bits.iter().position(|&b| b > 1) {
        None => Ok(()),
        Some(i) => Err(Error::invalid(format!(
            "bit {i} has value {}, expected 0 or 1",
            bits[i]
        ))),
    }
}

/// A concrete block code with fixed message and codeword lengths.
#[derive(Clone, Debug)]
pub enum Code {
    /// Identity map; used as the uncoded-BPSK reference.
    Uncoded { n: usize },
    Conv(ConvCode),
    Ldpc(LdpcCode),
}

impl Code {
    pub fn n(&self) -> usize {
        match self {
            Code::Uncoded { n } => *n,
            Code::Conv(c) => c.n(),
            Code::Ldpc(c) => c.n(),
        }
    }

    pub fn l(&self) -> usize {
        match self {
            Code::Uncoded { n } => *n,
            Code::Conv(c) => c.l(),
            Code::Ldpc(c) => c.l(),
        }
    }

    pub fn encode(&self, msg: &[u8]) -> Result<Codeword> {
        match self {
            Code::Uncoded { n } => {
                check_len(*n, msg.len())?;
                check_binary(msg)?;
                Ok(Codeword(msg.to_vec()))
            }
            Code::Conv(c) => c.encode(msg),
            Code::Ldpc(c) => c.encode(msg),
        }
    }

    /// Short human-readable descriptor, used in reports.
    pub fn descriptor(&self) -> String {
        match self {
            Code::Uncoded { .. } => "uncoded".to_string(),
            Code::Conv(c) => format!("conv:{}:{}", c.spec().octal_string(), c.spec().termination()),
            Code::Ldpc(c) => format!("ldpc:{},{}:seed={}", c.dv(), c.dc(), c.seed()),
        }
    }
}

/// Serializable description of a code, from which [`Code`] is rebuilt deterministically.
///
/// The text form is `conv:<octal polys>:<termination>:n=<n>`,
/// `ldpc:<dv>,<dc>:seed=<seed>:n=<n>` or `uncoded:n=<n>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodeConfig {
    Uncoded {
        n: usize,
    },
    Conv {
        polys: String,
        n: usize,
        #[serde(default)]
        termination: Termination,
    },
    Ldpc {
        n: usize,
        dv: usize,
        dc: usize,
        #[serde(default = "default_ldpc_seed")]
        seed: u64,
    },
}

fn default_ldpc_seed() -> u64 {
    1
}

impl Default for CodeConfig {
    fn default() -> Self {
        CodeConfig::Conv {
            polys: "5,7".into(),
            n: 100,
            termination: Termination::ZeroTail,
        }
    }
}

impl CodeConfig {
    pub fn n(&self) -> usize {
        match self {
            CodeConfig::Uncoded { n } | CodeConfig::Conv { n, .. } | CodeConfig::Ldpc { n, .. } => *n,
        }
    }

    pub fn with_n(mut self, new_n: usize) -> Self {
        match &mut self {
            CodeConfig::Uncoded { n } | CodeConfig::Conv { n, .. } | CodeConfig::Ldpc { n, .. } => {
                *n = new_n
            }
        }
        self
    }

    pub fn build(&self) -> Result<Code> {
        match self {
            CodeConfig::Uncoded { n } => {
                if *n == 0 {
                    return Err(Error::invalid("blocklength must be positive"));
                }
                Ok(Code::Uncoded { n: *n })
            }
            CodeConfig::Conv {
                polys,
                n,
                termination,
            } => {
                let spec = ConvCodeSpec::from_octal(polys, *termination)?;
                Ok(Code::Conv(ConvCode::new(spec, *n)?))
            }
            CodeConfig::Ldpc { n, dv, dc, seed } => Ok(Code::Ldpc(ldpc_generate(*n, *dv, *dc, *seed)?)),
        }
    }
}

impl fmt::Display for CodeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeConfig::Uncoded { n } => write!(f, "uncoded:n={n}"),
            CodeConfig::Conv {
                polys,
                n,
                termination,
            } => write!(f, "conv:{polys}:{termination}:n={n}"),
            CodeConfig::Ldpc { n, dv, dc, seed } => write!(f, "ldpc:{dv},{dc}:seed={seed}:n={n}"),
        }
    }
}

/// Blocklength assumed when a descriptor leaves it out.
pub const DEFAULT_BLOCKLENGTH: usize = 100;

impl FromStr for CodeConfig {
    type Err = Error;

    /// Accepts the [`Display`](fmt::Display) form; the termination, LDPC
    /// seed and `n=` parts may be omitted.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unrecognized code descriptor {s:?}"));
        let mut parts = s.trim().split(':');
        let family = parts.next().ok_or_else(bad)?;
        let mut n = DEFAULT_BLOCKLENGTH;
        let mut seed = default_ldpc_seed();
        let mut termination = Termination::default();
        let mut params = None;
        for (i, part) in parts.enumerate() {
            if let Some(v) = part.strip_prefix("n=") {
                n = v.parse().map_err(|_| bad())?;
            } else if let Some(v) = part.strip_prefix("seed=") {
                seed = v.parse().map_err(|_| bad())?;
            } else if i == 0 && family != "uncoded" {
                params = Some(part);
            } else if family == "conv" {
                termination = part.parse()?;
            } else {
                return Err(bad());
            }
        }
        match (family, params) {
            ("uncoded", None) => Ok(CodeConfig::Uncoded { n }),
            ("conv", Some(polys)) => Ok(CodeConfig::Conv {
                polys: polys.to_string(),
                n,
                termination,
            }),
            ("ldpc", Some(weights)) => {
                let (dv, dc) = parse_pair(weights).ok_or_else(bad)?;
                Ok(CodeConfig::Ldpc { n, dv, dc, seed })
            }
            _ => Err(bad()),
        }
    }
}

pub(crate) fn parse_pair(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}
