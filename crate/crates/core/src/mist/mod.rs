//! Mixed-SNR independent sampling: every training iteration draws a fresh
//! batch in which each row has its own SNR, message and noise.

mod checkpoint;

pub use checkpoint::{checkpoint_digest, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, TrainingMetadata, FORMAT_VERSION, MAGIC};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::{bpsk_symbol, ChannelKind, RandomStream};
use crate::codes::{Code, CodeConfig};
use crate::error::{Error, Result};
use crate::neural::{adam_step, mse_loss, AdamConfig, AdamState, CnnConfig, CnnDecoder, Mode, Tensor3};

/// Stream tags under the training seed.
const INIT_STREAM: u64 = 1;
const DATA_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDecay {
    /// Iterations between decays.
    pub every: usize,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub code: CodeConfig,
    pub channel: ChannelKind,
    /// Training SNRs in dB; each row picks one uniformly.
    pub snr_set: Vec<f64>,
    pub batch_size: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_decay: Option<StepDecay>,
    pub seed: u64,
    pub loss_log_every: usize,
    pub kernel_size: usize,
    pub widths: Vec<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            code: CodeConfig::default(),
            channel: ChannelKind::Awgn,
            snr_set: (0..=8).map(f64::from).collect(),
            batch_size: 256,
            iterations: 20_000,
            learning_rate: 1e-3,
            lr_decay: None,
            seed: 0,
            loss_log_every: 1,
            kernel_size: 24,
            widths: vec![10, 50, 50],
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::invalid("batch size must be at least 2"));
        }
        if self.snr_set.is_empty() {
            return Err(Error::invalid("training SNR set is empty"));
        }
        if self.snr_set.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(Error::invalid("training SNRs must be numbers"));
        }
        if self.loss_log_every == 0 {
            return Err(Error::invalid("loss_log_every must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if let Some(d) = self.lr_decay {
            if d.every == 0 || !(d.factor > 0.0 && d.factor <= 1.0) {
                return Err(Error::invalid("step decay needs every > 0 and factor in (0, 1]"));
            }
        }
        self.channel.validate()?;
        // The message length is only known once the code is built.
        self.cnn_config(1).validate()
    }

    /// Architecture for a code with `l` message bits.
    pub fn cnn_config(&self, l: usize) -> CnnConfig {
        CnnConfig::new(self.code.n(), l, self.kernel_size, self.widths.clone())
    }

    /// Learning rate in effect at zero-based iteration `t`.
    pub fn learning_rate_at(&self, t: usize) -> f64 {
        match self.lr_decay {
            Some(d) => self.learning_rate * d.factor.powi((t / d.every) as i32),
            None => self.learning_rate,
        }
    }

    /// Freshly initialized model for this configuration's code.
    pub fn initial_model(&self, code: &Code) -> Result<CnnDecoder<f32>> {
        let mut rng = RandomStream::derived(self.seed, &[INIT_STREAM]);
        CnnDecoder::new(self.cnn_config(code.l()), &mut rng)
    }
}

/// One training batch, rows in lockstep.
#[derive(Clone, Debug)]
pub struct Batch {
    /// Received samples, `(β, n, 1)`.
    pub y: Tensor3<f32>,
    /// Messages, `β × ℓ` row-major.
    pub messages: Vec<u8>,
    /// Codewords, `β × n` row-major.
    pub codewords: Vec<u8>,
    /// SNR drawn for each row.
    pub snr_db: Vec<f64>,
}

/// Draws batches on demand. Call `t` uses its own random stream, so any batch
/// can be regenerated from the seed and its index.
pub struct BatchGenerator {
    code: Code,
    channel: ChannelKind,
    snr_set: Vec<f64>,
    batch_size: usize,
    seed: u64,
    calls: u64,
}

impl BatchGenerator {
    pub fn new(cfg: &TrainingConfig, code: Code) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            code,
            channel: cfg.channel,
            snr_set: cfg.snr_set.clone(),
            batch_size: cfg.batch_size,
            seed: cfg.seed,
            calls: 0,
        })
    }

    pub fn code(&self) -> &Code {
        &self.code
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn generate(&mut self) -> Result<Batch> {
        let mut rng = RandomStream::derived(self.seed, &[DATA_STREAM, self.calls]);
        self.calls += 1;
        let (n, l, rows) = (self.code.n(), self.code.l(), self.batch_size);
        let mut messages = Vec::with_capacity(rows * l);
        let mut codewords = Vec::with_capacity(rows * n);
        let mut snr_db = Vec::with_capacity(rows);
        let mut y = vec![0.0; rows * n];
        let mut symbols = vec![0.0; n];
        for row in y.chunks_mut(n) {
            let snr = self.snr_set[rng.index(self.snr_set.len())];
            let msg = rng.bits(l);
            let cw = self.code.encode(&msg)?;
            for (s, &b) in symbols.iter_mut().zip(cw.iter()) {
                *s = bpsk_symbol(b);
            }
            self.channel.at(snr).transmit_into(&symbols, row, &mut rng);
            snr_db.push(snr);
            messages.extend_from_slice(&msg);
            codewords.extend_from_slice(&cw);
        }
        Ok(Batch {
            y: Tensor3::from_rows(&y, n)?,
            messages,
            codewords,
            snr_db,
        })
    }
}

/// Batch losses at the logged iterations (numbered from 1).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossHistory {
    pub points: Vec<(usize, f64)>,
}

impl LossHistory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn losses(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    /// Mean of the first `count` logged losses.
    pub fn head_mean(&self, count: usize) -> f64 {
        mean(self.points.iter().take(count).map(|p| p.1))
    }

    /// Mean of the last `count` logged losses.
    pub fn tail_mean(&self, count: usize) -> f64 {
        mean(self.points.iter().rev().take(count).map(|p| p.1))
    }

    /// `# `-prefixed comments, then `iteration,loss` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        crate::eval::write_comments(&mut out, comments)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "loss"])?;
        for &(it, loss) in &self.points {
            w.write_record([it.to_string(), format_loss(loss)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-tripping decimal form.
pub(crate) fn format_loss(v: f64) -> String {
    format!("{v:?}")
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = it.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Runs `cfg.iterations` steps and returns the model in inference mode.
pub fn train(model: CnnDecoder<f32>, cfg: &TrainingConfig) -> Result<(CnnDecoder<f32>, LossHistory)> {
    train_with(model, cfg, |_, _| {})
}

/// [`train`] with a callback on every logged loss.
pub fn train_with(
    mut model: CnnDecoder<f32>,
    cfg: &TrainingConfig,
    mut on_log: impl FnMut(usize, f64),
) -> Result<(CnnDecoder<f32>, LossHistory)> {
    cfg.validate()?;
    let code = cfg.code.build()?;
    model.check_compatible(code.n(), code.l())?;
    let (beta, l) = (cfg.batch_size, code.l());
    let mut generator = BatchGenerator::new(cfg, code)?;
    let adam = AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    };
    let mut state = AdamState::new(adam, &model.parameter_shapes());
    let mut history = LossHistory::default();
    model.set_mode(Mode::Train);

    for t in 0..cfg.iterations {
        state.set_learning_rate(cfg.learning_rate_at(t));
        let batch = generator.generate()?;
        let stats: Vec<_> = model
            .blocks()
            .iter()
            .map(|b| (b.bn.running_mean.clone(), b.bn.running_var.clone()))
            .collect();
        let abort = |mut model: CnnDecoder<f32>, reason: String| {
            for (b, (m, v)) in model.blocks_mut().iter_mut().zip(stats.clone()) {
                b.bn.running_mean = m;
                b.bn.running_var = v;
            }
            model.set_mode(Mode::Infer);
            Error::TrainingAborted {
                iteration: t + 1,
                reason,
                last_good: Box::new(model),
            }
        };

        let (posteriors, cache) = model.forward_train(&batch.y)?;
        let (loss, grad) = mse_loss(&batch.messages, &posteriors, beta, l)?;
        if !loss.is_finite() {
            return Err(abort(model, format!("loss is {loss}")));
        }
        let grads = model.backward(&cache, &grad)?;
        let step = adam_step(&mut model.parameters_mut(), &grads.as_slices(), &mut state);
        if let Err(e) = step {
            return Err(abort(model, e.to_string()));
        }
        if t % cfg.loss_log_every == 0 {
            let loss = f64::from(loss);
            history.points.push((t + 1, loss));
            on_log(t + 1, loss);
        }
    }
    model.set_mode(Mode::Infer);
    Ok((model, history))
}

/// Builds the code, initializes a model from the seed and trains it.
pub fn train_from_scratch(cfg: &TrainingConfig) -> Result<(CnnDecoder<f32>, LossHistory)> {
    let model = cfg.initial_model(&cfg.code.build()?)?;
    train(model, cfg)
}
