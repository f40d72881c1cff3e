//! Every decoder behind one interface, so a sweep can run them on the same
//! channel draws.

use crate::channel::{hard_slice, ChannelModel, SymbolVector};
use crate::classical::{
    bit_flip_decode, bp_decode, enumerate_codebook, llr_from_awgn, map_bruteforce, viterbi_hard, viterbi_soft,
    DEFAULT_MAX_ITER,
};
use crate::codes::{Code, ConvCode, LdpcCode, MessageWord};
use crate::error::{Error, Result};
use crate::neural::CnnDecoder;

pub const DECODER_NAMES: [&str; 7] = ["uncoded", "viterbi-hard", "viterbi-soft", "bit-flip", "bp", "map", "cnn"];

/// Maps received blocks to message estimates.
pub trait Decoder: Send + Sync {
    fn name(&self) -> &str;

    /// Decodes one block of `n` samples. `channel` is the operating point the
    /// block was sent at; only LLR-based decoders look at it.
    fn decode(&self, y: &[f64], channel: &ChannelModel) -> Result<MessageWord>;

    /// Decodes consecutive `n`-sample blocks into consecutive messages.
    fn decode_rows(&self, rows: &[f64], n: usize, channel: &ChannelModel) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for y in rows.chunks(n) {
            out.extend_from_slice(&self.decode(y, channel)?);
        }
        Ok(out)
    }
}

pub struct UncodedDecoder;

impl Decoder for UncodedDecoder {
    fn name(&self) -> &str {
        "uncoded"
    }

    fn decode(&self, y: &[f64], _: &ChannelModel) -> Result<MessageWord> {
        Ok(MessageWord(hard_slice(y)))
    }
}

pub struct HardViterbi(pub ConvCode);

impl Decoder for HardViterbi {
    fn name(&self) -> &str {
        "viterbi-hard"
    }

    fn decode(&self, y: &[f64], _: &ChannelModel) -> Result<MessageWord> {
        viterbi_hard(&hard_slice(y), &self.0)
    }
}

pub struct SoftViterbi(pub ConvCode);

impl Decoder for SoftViterbi {
    fn name(&self) -> &str {
        "viterbi-soft"
    }

    fn decode(&self, y: &[f64], _: &ChannelModel) -> Result<MessageWord> {
        viterbi_soft(y, &self.0)
    }
}

pub struct BitFlip {
    pub code: LdpcCode,
    pub max_iter: usize,
}

impl Decoder for BitFlip {
    fn name(&self) -> &str {
        "bit-flip"
    }

    fn decode(&self, y: &[f64], _: &ChannelModel) -> Result<MessageWord> {
        Ok(bit_flip_decode(&hard_slice(y), &self.code, self.max_iter)?.message)
    }
}

/// Sum-product decoding. LLRs assume Gaussian noise at the channel's nominal
/// SNR, also on the outage channel.
pub struct BeliefPropagation {
    pub code: LdpcCode,
    pub max_iter: usize,
}

impl Decoder for BeliefPropagation {
    fn name(&self) -> &str {
        "bp"
    }

    fn decode(&self, y: &[f64], channel: &ChannelModel) -> Result<MessageWord> {
        let llr = llr_from_awgn(y, channel.snr_db());
        Ok(bp_decode(&llr, &self.code, self.max_iter)?.message)
    }
}

/// Exhaustive minimum-distance decoding; only for codes with few message bits.
pub struct MapOracle {
    codebook: Vec<(MessageWord, SymbolVector)>,
}

impl MapOracle {
    pub fn new(code: &Code) -> Result<Self> {
        Ok(Self {
            codebook: enumerate_codebook(code)?,
        })
    }
}

impl Decoder for MapOracle {
    fn name(&self) -> &str {
        "map"
    }

    fn decode(&self, y: &[f64], _: &ChannelModel) -> Result<MessageWord> {
        map_bruteforce(y, &self.codebook)
    }
}

pub struct CnnBlockDecoder(pub CnnDecoder<f32>);

impl Decoder for CnnBlockDecoder {
    fn name(&self) -> &str {
        "cnn"
    }

    fn decode(&self, y: &[f64], _: &ChannelModel) -> Result<MessageWord> {
        self.0.decode(y)
    }

    fn decode_rows(&self, rows: &[f64], _: usize, _: &ChannelModel) -> Result<Vec<u8>> {
        self.0.decode_rows(rows)
    }
}

fn unknown(name: &str) -> Error {
    Error::UnknownDecoder {
        name: name.to_string(),
        valid: DECODER_NAMES.join(", "),
    }
}

fn wrong_family(name: &str, code: &Code) -> Error {
    Error::invalid(format!("decoder {name} does not apply to {}", code.descriptor()))
}

/// Builds a decoder by name for `code`. `cnn` needs a trained model whose
/// shape matches the code.
pub fn decoder_by_name(name: &str, code: &Code, cnn: Option<&CnnDecoder<f32>>) -> Result<Box<dyn Decoder>> {
    Ok(match (name, code) {
        ("uncoded", Code::Uncoded { .. }) => Box::new(UncodedDecoder),
        ("viterbi-hard", Code::Conv(c)) => Box::new(HardViterbi(c.clone())),
        ("viterbi-soft", Code::Conv(c)) => Box::new(SoftViterbi(c.clone())),
        ("bit-flip", Code::Ldpc(c)) => Box::new(BitFlip {
            code: c.clone(),
            max_iter: DEFAULT_MAX_ITER,
        }),
        ("bp", Code::Ldpc(c)) => Box::new(BeliefPropagation {
            code: c.clone(),
            max_iter: DEFAULT_MAX_ITER,
        }),
        ("map", _) => Box::new(MapOracle::new(code)?),
        ("cnn", _) => {
            let model = cnn.ok_or_else(|| Error::invalid("the cnn decoder needs a checkpoint"))?;
            model.check_compatible(code.n(), code.l())?;
            Box::new(CnnBlockDecoder(model.clone()))
        }
        _ if DECODER_NAMES.contains(&name) => return Err(wrong_family(name, code)),
        _ => return Err(unknown(name)),
    })
}
