//! The CNN decoder: three `conv → ReLU → batch norm` blocks and a dense
//! sigmoid head producing one posterior per message bit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::batchnorm::{BatchNorm, BnCache};
use super::conv::{Conv1d, ConvCache};
use super::dense::{relu, relu_backward, DenseSigmoid};
use super::{Mode, Real, Tensor3};
use crate::codes::MessageWord;
use crate::error::{Error, Result};

/// Rows decoded per forward pass in batched inference; the dense weights are
/// streamed once per pass.
const INFER_CHUNK: usize = 256;
/// Rows pushed through the convolutional stack at a time, small enough for
/// the activations to stay in cache.
const FEATURE_CHUNK: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnConfig {
    /// Input blocklength.
    pub n: usize,
    /// Message bits produced.
    pub l: usize,
    pub kernel_size: usize,
    /// Output channels of each convolution block.
    pub widths: Vec<usize>,
}

impl CnnConfig {
    pub fn new(n: usize, l: usize, kernel_size: usize, widths: Vec<usize>) -> Self {
        Self {
            n,
            l,
            kernel_size,
            widths,
        }
    }

    /// 10-50-50 channels with kernel 24.
    pub fn standard(n: usize, l: usize) -> Self {
        Self::new(n, l, 24, vec![10, 50, 50])
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.l == 0 || self.kernel_size == 0 {
            return Err(Error::invalid("n, l and kernel size must be positive"));
        }
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::invalid("every convolution block needs a positive width"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvBlock<T> {
    pub conv: Conv1d<T>,
    pub bn: BatchNorm<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnnDecoder<T> {
    config: CnnConfig,
    blocks: Vec<ConvBlock<T>>,
    dense: DenseSigmoid<T>,
    mode: Mode,
}

struct BlockCache<T> {
    conv: ConvCache<T>,
    activation: Tensor3<T>,
    bn: BnCache<T>,
}

/// Intermediate values of a training-mode forward pass.
pub struct CnnCache<T> {
    blocks: Vec<BlockCache<T>>,
    features: Tensor3<T>,
    posteriors: Vec<T>,
}

impl<T> CnnCache<T> {
    pub fn posteriors(&self) -> &[T] {
        &self.posteriors
    }
}

/// Parameter gradients, in the order of [`CnnDecoder::parameters`].
#[derive(Clone, Debug)]
pub struct CnnGrads<T> {
    pub tensors: Vec<Vec<T>>,
}

impl<T> CnnGrads<T> {
    pub fn as_slices(&self) -> Vec<&[T]> {
        self.tensors.iter().map(Vec::as_slice).collect()
    }
}

impl<T: Real> CnnDecoder<T> {
    /// Fresh model in training mode with Glorot-uniform weights.
    pub fn new(config: CnnConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut blocks = Vec::with_capacity(config.widths.len());
        let mut cin = 1;
        for &w in &config.widths {
            blocks.push(ConvBlock {
                conv: Conv1d::init(config.kernel_size, cin, w, rng)?,
                bn: BatchNorm::new(w),
            });
            cin = w;
        }
        let dense = DenseSigmoid::init(config.n * cin, config.l, rng)?;
        Ok(Self {
            config,
            blocks,
            dense,
            mode: Mode::Train,
        })
    }

    pub(crate) fn from_parts(config: CnnConfig, blocks: Vec<ConvBlock<T>>, dense: DenseSigmoid<T>, mode: Mode) -> Self {
        Self {
            config,
            blocks,
            dense,
            mode,
        }
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn blocks(&self) -> &[ConvBlock<T>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [ConvBlock<T>] {
        &mut self.blocks
    }

    pub fn dense(&self) -> &DenseSigmoid<T> {
        &self.dense
    }

    pub fn dense_mut(&mut self) -> &mut DenseSigmoid<T> {
        &mut self.dense
    }

    /// Refuses blocklengths other than the ones the model was built for.
    pub fn check_compatible(&self, n: usize, l: usize) -> Result<()> {
        if self.config.n != n || self.config.l != l {
            return Err(Error::shape(format!(
                "model decodes n = {}, l = {} but the code has n = {n}, l = {l}",
                self.config.n, self.config.l
            )));
        }
        Ok(())
    }

    /// Output shape of every layer for a batch of `batch` rows.
    pub fn shape_chain(&self, batch: usize) -> Vec<Vec<usize>> {
        let mut shapes: Vec<Vec<usize>> = self
            .config
            .widths
            .iter()
            .flat_map(|&w| [vec![batch, self.config.n, w], vec![batch, self.config.n, w]])
            .collect();
        shapes.push(vec![batch, self.config.l]);
        shapes
    }

    pub fn parameters(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        for b in &self.blocks {
            out.extend([&b.conv.weight[..], &b.conv.bias, &b.bn.gamma, &b.bn.beta]);
        }
        out.extend([&self.dense.weight[..], &self.dense.bias]);
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for b in &mut self.blocks {
            out.push(&mut b.conv.weight);
            out.push(&mut b.conv.bias);
            out.push(&mut b.bn.gamma);
            out.push(&mut b.bn.beta);
        }
        out.push(&mut self.dense.weight);
        out.push(&mut self.dense.bias);
        out
    }

    pub fn parameter_shapes(&self) -> Vec<usize> {
        self.parameters().iter().map(|p| p.len()).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.parameter_shapes().iter().sum()
    }

    fn check_input(&self, y: &Tensor3<T>) -> Result<()> {
        if y.len() != self.config.n || y.channels() != 1 {
            return Err(Error::shape(format!(
                "decoder input must be (batch, {}, 1), got {:?}",
                self.config.n,
                y.dims()
            )));
        }
        Ok(())
    }

    fn require(&self, mode: Mode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::WrongMode {
                expected: mode.as_str(),
                actual: self.mode.as_str(),
            });
        }
        Ok(())
    }

    /// Training-mode forward pass: batch statistics, running averages updated.
    pub fn forward_train(&mut self, y: &Tensor3<T>) -> Result<(Vec<T>, CnnCache<T>)> {
        self.require(Mode::Train)?;
        self.check_input(y)?;
        let mut caches = Vec::with_capacity(self.blocks.len());
        let mut x = y.clone();
        for block in &mut self.blocks {
            let (z, conv) = block.conv.forward(&x)?;
            let activation = relu(&z);
            let (out, bn) = block.bn.forward_train(&activation)?;
            caches.push(BlockCache { conv, activation, bn });
            x = out;
        }
        let posteriors = self.dense.forward(&x)?;
        Ok((
            posteriors.clone(),
            CnnCache {
                blocks: caches,
                features: x,
                posteriors,
            },
        ))
    }

    /// Parameter gradients for `dL/dposterior`.
    pub fn backward(&self, cache: &CnnCache<T>, grad: &[T]) -> Result<CnnGrads<T>> {
        if cache.blocks.len() != self.blocks.len() {
            return Err(Error::shape("cache does not belong to this model"));
        }
        let (mut g, dense) = self.dense.backward(&cache.features, &cache.posteriors, grad)?;
        let mut per_block = Vec::with_capacity(self.blocks.len());
        for (i, (block, bc)) in self.blocks.iter().zip(&cache.blocks).enumerate().rev() {
            let (g_act, bn) = block.bn.backward(&g, &bc.bn)?;
            let g_z = relu_backward(&g_act, &bc.activation)?;
            let (g_in, conv) = block.conv.backward(&g_z, &bc.conv, i > 0)?;
            per_block.push([conv.weight, conv.bias, bn.gamma, bn.beta]);
            if let Some(g_in) = g_in {
                g = g_in;
            }
        }
        let mut tensors: Vec<Vec<T>> = per_block.into_iter().rev().flatten().collect();
        tensors.push(dense.weight);
        tensors.push(dense.bias);
        Ok(CnnGrads { tensors })
    }

    /// Inference-mode posteriors, `(batch, l)` row-major.
    pub fn predict(&self, y: &Tensor3<T>) -> Result<Vec<T>> {
        self.require(Mode::Infer)?;
        self.check_input(y)?;
        let (batch, len, cin) = y.dims();
        let width = self.config.widths.last().copied().unwrap_or(cin);
        let mut features = Vec::with_capacity(batch * len * width);
        for rows in y.data().chunks(FEATURE_CHUNK * len * cin) {
            let mut x = Tensor3::new(rows.len() / (len * cin), len, cin, rows.to_vec())?;
            for block in &self.blocks {
                let (z, _) = block.conv.forward(&x)?;
                x = block.bn.forward_infer(&relu(&z))?;
            }
            features.extend_from_slice(x.data());
        }
        self.dense.forward(&Tensor3::new(batch, len, width, features)?)
    }

    /// Posterior quantization: 1 iff the posterior exceeds 0.5.
    pub fn decode(&self, y: &[f64]) -> Result<MessageWord> {
        Ok(MessageWord(self.decode_rows(y)?))
    }

    /// Decodes consecutive blocks of `n` samples into consecutive `l`-bit messages.
    pub fn decode_rows(&self, rows: &[f64]) -> Result<Vec<u8>> {
        self.require(Mode::Infer)?;
        let n = self.config.n;
        if rows.is_empty() || rows.len() % n != 0 {
            return Err(Error::shape(format!(
                "{} samples are not a whole number of {n}-sample blocks",
                rows.len()
            )));
        }
        let half = T::lit(0.5);
        let mut out = Vec::with_capacity(rows.len() / n * self.config.l);
        for chunk in rows.chunks(INFER_CHUNK * n) {
            let post = self.predict(&Tensor3::from_rows(chunk, n)?)?;
            out.extend(post.iter().map(|&p| (p > half) as u8));
        }
        Ok(out)
    }

    /// Same model in another precision.
    pub fn cast<U: Real>(&self) -> CnnDecoder<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::lit(x.as_f64())).collect::<Vec<U>>();
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut c = Conv1d::zeros(b.conv.kernel(), b.conv.in_channels(), b.conv.out_channels())
                    .expect("existing layer shape");
                c.weight = conv(&b.conv.weight);
                c.bias = conv(&b.conv.bias);
                ConvBlock {
                    conv: c,
                    bn: BatchNorm {
                        gamma: conv(&b.bn.gamma),
                        beta: conv(&b.bn.beta),
                        running_mean: conv(&b.bn.running_mean),
                        running_var: conv(&b.bn.running_var),
                        epsilon: U::lit(b.bn.epsilon.as_f64()),
                        momentum: U::lit(b.bn.momentum.as_f64()),
                    },
                }
            })
            .collect();
        let mut dense = DenseSigmoid::zeros(self.dense.inputs(), self.dense.outputs()).expect("existing layer shape");
        dense.weight = conv(&self.dense.weight);
        dense.bias = conv(&self.dense.bias);
        CnnDecoder::from_parts(self.config.clone(), blocks, dense, self.mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> CnnDecoder<f64> {
        CnnDecoder::new(CnnConfig::new(12, 4, 3, vec![2, 3, 3]), &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn table_shapes() {
        let model = CnnDecoder::<f32>::new(CnnConfig::standard(100, 48), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(
            model.shape_chain(7),
            vec![
                vec![7, 100, 10],
                vec![7, 100, 10],
                vec![7, 100, 50],
                vec![7, 100, 50],
                vec![7, 100, 50],
                vec![7, 100, 50],
                vec![7, 48],
            ]
        );
        assert_eq!(model.dense().inputs(), 5000);
    }

    #[test]
    fn posteriors_inside_unit_interval() {
        let mut model = tiny();
        let y = Tensor3::from_rows(&(0..24).map(|i| (i as f64 * 0.37).sin()).collect::<Vec<_>>(), 12).unwrap();
        let (p, _) = model.forward_train(&y).unwrap();
        assert_eq!(p.len(), 8);
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn mode_misuse_is_an_error() {
        let mut model = tiny();
        let y = Tensor3::zeros(2, 12, 1);
        assert!(matches!(model.predict(&y), Err(Error::WrongMode { .. })));
        assert!(model.decode(&[0.0; 12]).is_err());
        model.set_mode(Mode::Infer);
        assert!(model.forward_train(&y).is_err());
        assert!(model.predict(&Tensor3::zeros(2, 11, 1)).is_err());
        assert!(model.decode(&[0.0; 13]).is_err());
    }

    #[test]
    fn quantization_rule() {
        let mut model = tiny();
        model.set_mode(Mode::Infer);
        // Dense weights zero: every posterior is exactly 0.5 and ties go to 0.
        model.dense_mut().weight.fill(0.0);
        assert_eq!(model.decode(&[0.3; 12]).unwrap().0, vec![0; 4]);
        model.dense_mut().bias.copy_from_slice(&[2.2, -2.2, 0.1, -0.1]);
        assert_eq!(model.decode(&[0.3; 12]).unwrap().0, vec![1, 0, 1, 0]);
    }

    #[test]
    fn cast_round_trip_is_exact_from_f32() {
        let model = CnnDecoder::<f32>::new(CnnConfig::new(12, 4, 3, vec![2, 3, 3]), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(model.cast::<f64>().cast::<f32>(), model);
    }
}
