//! Binary checkpoint files. The byte layout is described in
//! `docs/checkpoint-format.md`.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::TrainingConfig;
use crate::channel::ChannelKind;
use crate::codes::CodeConfig;
use crate::error::{Error, Result};
use crate::neural::{BatchNorm, CnnConfig, CnnDecoder, Conv1d, ConvBlock, DenseSigmoid, Mode, Real};

pub const MAGIC: &[u8; 8] = b"MISTCKPT";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

/// How a checkpointed model was trained.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingMetadata {
    pub code: CodeConfig,
    pub channel: ChannelKind,
    pub snr_set: Vec<f64>,
    pub iterations: u64,
    pub batch_size: u64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl From<&TrainingConfig> for TrainingMetadata {
    fn from(cfg: &TrainingConfig) -> Self {
        Self {
            code: cfg.code.clone(),
            channel: cfg.channel,
            snr_set: cfg.snr_set.clone(),
            iterations: cfg.iterations as u64,
            batch_size: cfg.batch_size as u64,
            learning_rate: cfg.learning_rate,
            seed: cfg.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: CnnDecoder<f32>,
    pub metadata: TrainingMetadata,
    /// Hex SHA-256 stored in the file trailer.
    pub digest: String,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_values<T: Real>(out: &mut Vec<u8>, values: &[T]) {
    for &v in values {
        v.write_le(out);
    }
}

/// Serialized file contents, digest trailer included.
pub fn encode_checkpoint<T: Real>(model: &CnnDecoder<T>, meta: &TrainingMetadata) -> Vec<u8> {
    let cfg = model.config();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION as usize);
    out.push(T::BYTES as u8);
    put_u32(&mut out, cfg.n);
    put_u32(&mut out, cfg.l);
    put_u32(&mut out, cfg.kernel_size);
    put_u32(&mut out, cfg.widths.len());
    for &w in &cfg.widths {
        put_u32(&mut out, w);
    }
    let first = &model.blocks()[0].bn;
    put_f64(&mut out, first.epsilon.as_f64());
    put_f64(&mut out, first.momentum.as_f64());

    let code = meta.code.to_string();
    put_u32(&mut out, code.len());
    out.extend_from_slice(code.as_bytes());
    match meta.channel {
        ChannelKind::Awgn => {
            out.push(0);
            put_f64(&mut out, 0.0);
            put_f64(&mut out, 0.0);
        }
        ChannelKind::Outage { alpha, outage_snr_db } => {
            out.push(1);
            put_f64(&mut out, alpha);
            put_f64(&mut out, outage_snr_db);
        }
    }
    put_u32(&mut out, meta.snr_set.len());
    for &s in &meta.snr_set {
        put_f64(&mut out, s);
    }
    put_u64(&mut out, meta.iterations);
    put_u64(&mut out, meta.batch_size);
    put_f64(&mut out, meta.learning_rate);
    put_u64(&mut out, meta.seed);

    for b in model.blocks() {
        put_values(&mut out, &b.conv.weight);
        put_values(&mut out, &b.conv.bias);
        put_values(&mut out, &b.bn.gamma);
        put_values(&mut out, &b.bn.beta);
        put_values(&mut out, &b.bn.running_mean);
        put_values(&mut out, &b.bn.running_var);
    }
    put_values(&mut out, &model.dense().weight);
    put_values(&mut out, &model.dense().bias);
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

/// Writes a checkpoint and returns its hex digest.
pub fn save_checkpoint<T: Real>(model: &CnnDecoder<T>, meta: &TrainingMetadata, path: &Path) -> Result<String> {
    let bytes = encode_checkpoint(model, meta);
    fs::write(path, &bytes)?;
    Ok(hex::encode(&bytes[bytes.len() - DIGEST_LEN..]))
}

/// Hex digest of a checkpoint file, read from its trailer.
pub fn checkpoint_digest(path: &Path) -> Result<String> {
    Ok(load_checkpoint(path)?.digest)
}

/// Why a parse stopped.
enum Fault {
    Short,
    Bad(String),
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], Fault> {
        let end = self.pos.checked_add(len).ok_or(Fault::Short)?;
        let s = self.bytes.get(self.pos..end).ok_or(Fault::Short)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, Fault> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, Fault> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64, Fault> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, Fault> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn values<T: Real>(&mut self, count: usize) -> Result<Vec<T>, Fault> {
        let len = count.checked_mul(T::BYTES).ok_or(Fault::Short)?;
        Ok(self.take(len)?.chunks_exact(T::BYTES).map(T::read_le).collect())
    }
}

fn parse<T: Real>(r: &mut Reader<'_>, cfg: CnnConfig, epsilon: f64, momentum: f64) -> Result<CnnDecoder<T>, Fault> {
    let mut blocks = Vec::with_capacity(cfg.widths.len());
    let mut cin = 1;
    for &w in &cfg.widths {
        let mut conv = Conv1d::zeros(cfg.kernel_size, cin, w).map_err(|e| Fault::Bad(e.to_string()))?;
        conv.weight = r.values(cfg.kernel_size * cin * w)?;
        conv.bias = r.values(w)?;
        let mut bn = BatchNorm::new(w);
        bn.gamma = r.values(w)?;
        bn.beta = r.values(w)?;
        bn.running_mean = r.values(w)?;
        bn.running_var = r.values(w)?;
        bn.epsilon = T::lit(epsilon);
        bn.momentum = T::lit(momentum);
        blocks.push(ConvBlock { conv, bn });
        cin = w;
    }
    let mut dense = DenseSigmoid::zeros(cfg.n * cin, cfg.l).map_err(|e| Fault::Bad(e.to_string()))?;
    dense.weight = r.values(cfg.n * cin * cfg.l)?;
    dense.bias = r.values(cfg.l)?;
    Ok(CnnDecoder::from_parts(cfg, blocks, dense, Mode::Infer))
}

fn decode(bytes: &[u8]) -> Result<(CnnDecoder<f32>, TrainingMetadata), Fault> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Fault::Bad("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION as usize {
        return Err(Fault::Bad(format!(
            "format version {version}, this build reads version {FORMAT_VERSION}"
        )));
    }
    let precision = r.u8()?;
    let (n, l, k, blocks) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    if blocks > 64 {
        return Err(Fault::Bad(format!("{blocks} convolution blocks")));
    }
    let widths = (0..blocks).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
    let cfg = CnnConfig::new(n, l, k, widths);
    cfg.validate().map_err(|e| Fault::Bad(e.to_string()))?;
    let (epsilon, momentum) = (r.f64()?, r.f64()?);

    let code_len = r.u32()?;
    let code = std::str::from_utf8(r.take(code_len)?)
        .map_err(|_| Fault::Bad("code descriptor is not UTF-8".into()))?
        .parse::<CodeConfig>()
        .map_err(|e| Fault::Bad(e.to_string()))?;
    let channel = match (r.u8()?, r.f64()?, r.f64()?) {
        (0, _, _) => ChannelKind::Awgn,
        (1, alpha, outage_snr_db) => ChannelKind::Outage { alpha, outage_snr_db },
        (tag, _, _) => return Err(Fault::Bad(format!("unknown channel tag {tag}"))),
    };
    let snr_count = r.u32()?;
    let snr_set = (0..snr_count).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    let metadata = TrainingMetadata {
        code,
        channel,
        snr_set,
        iterations: r.u64()?,
        batch_size: r.u64()?,
        learning_rate: r.f64()?,
        seed: r.u64()?,
    };

    let model = match precision {
        4 => parse::<f32>(&mut r, cfg, epsilon, momentum)?,
        8 => parse::<f64>(&mut r, cfg, epsilon, momentum)?.cast(),
        p => return Err(Fault::Bad(format!("unsupported precision of {p} bytes"))),
    };
    match r.pos + DIGEST_LEN {
        end if end > bytes.len() => Err(Fault::Short),
        end if end < bytes.len() => Err(Fault::Bad(format!("{} trailing bytes", bytes.len() - end))),
        _ => Ok((model, metadata)),
    }
}

/// Reads a checkpoint, verifying its digest. The model comes back in
/// inference mode; 64-bit checkpoints are narrowed to 32 bits.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    let fail = |reason: String| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let digest_ok = bytes.len() >= DIGEST_LEN && {
        let (body, trailer) = bytes.split_at(bytes.len() - DIGEST_LEN);
        Sha256::digest(body).as_slice() == trailer
    };
    match decode(&bytes) {
        Err(Fault::Short) => Err(fail("file is truncated".into())),
        Err(Fault::Bad(_)) | Ok(_) if !digest_ok => Err(Error::DigestMismatch),
        Err(Fault::Bad(reason)) => Err(fail(reason)),
        Ok((model, metadata)) => Ok(Checkpoint {
            model,
            metadata,
            digest: hex::encode(&bytes[bytes.len() - DIGEST_LEN..]),
        }),
    }
}
