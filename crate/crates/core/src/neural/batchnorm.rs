//! Per-channel batch normalization over `(batch × length)`.

use super::{Mode, Real, Tensor3};
use crate::error::{Error, Result};

pub const DEFAULT_BN_EPSILON: f64 = 1e-3;
pub const DEFAULT_BN_MOMENTUM: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub epsilon: T,
    /// Weight of the previous running value in the moving average.
    pub momentum: T,
}

#[derive(Clone, Debug)]
pub struct BnCache<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnGrads<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            epsilon: T::lit(DEFAULT_BN_EPSILON),
            momentum: T::lit(DEFAULT_BN_MOMENTUM),
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Tensor3<T>) -> Result<()> {
        if x.channels() != self.channels() {
            return Err(Error::shape(format!(
                "batch norm over {} channels got {}",
                self.channels(),
                x.channels()
            )));
        }
        Ok(())
    }

    /// Dispatches on `mode`; only training mode returns a cache.
    pub fn forward(&mut self, x: &Tensor3<T>, mode: Mode) -> Result<(Tensor3<T>, Option<BnCache<T>>)> {
        match mode {
            Mode::Train => self.forward_train(x).map(|(y, c)| (y, Some(c))),
            Mode::Infer => self.forward_infer(x).map(|y| (y, None)),
        }
    }

    /// Normalizes with batch statistics and folds them into the running averages.
    pub fn forward_train(&mut self, x: &Tensor3<T>) -> Result<(Tensor3<T>, BnCache<T>)> {
        self.check(x)?;
        if x.batch() < 2 {
            return Err(Error::Refused(
                "training-mode batch normalization needs a batch of at least 2".into(),
            ));
        }
        let c = self.channels();
        let count = (x.batch() * x.len()) as f64;
        let mut sum = vec![0.0f64; c];
        for row in x.data().chunks_exact(c) {
            for (s, v) in sum.iter_mut().zip(row) {
                *s += v.as_f64();
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
        let mut sq = vec![0.0f64; c];
        for row in x.data().chunks_exact(c) {
            for ((s, v), m) in sq.iter_mut().zip(row).zip(&mean) {
                let d = v.as_f64() - m;
                *s += d * d;
            }
        }
        let var: Vec<f64> = sq.iter().map(|s| s / count).collect();
        let eps = self.epsilon.as_f64();
        let inv_std: Vec<T> = var.iter().map(|v| T::lit(1.0 / (v + eps).sqrt())).collect();
        let mean_t: Vec<T> = mean.iter().map(|&m| T::lit(m)).collect();

        let mut xhat = vec![T::zero(); x.data().len()];
        let mut y = vec![T::zero(); x.data().len()];
        for ((xr, hr), yr) in x
            .data()
            .chunks_exact(c)
            .zip(xhat.chunks_exact_mut(c))
            .zip(y.chunks_exact_mut(c))
        {
            for ch in 0..c {
                let h = (xr[ch] - mean_t[ch]) * inv_std[ch];
                hr[ch] = h;
                yr[ch] = self.gamma[ch] * h + self.beta[ch];
            }
        }
        let mom = self.momentum;
        for ch in 0..c {
            self.running_mean[ch] = mom * self.running_mean[ch] + (T::one() - mom) * mean_t[ch];
            self.running_var[ch] = mom * self.running_var[ch] + (T::one() - mom) * T::lit(var[ch]);
        }
        let (b, l, _) = x.dims();
        Ok((Tensor3::new(b, l, c, y)?, BnCache { xhat, inv_std }))
    }

    /// Normalizes with the running statistics; never mutates the layer.
    pub fn forward_infer(&self, x: &Tensor3<T>) -> Result<Tensor3<T>> {
        self.check(x)?;
        let c = self.channels();
        let (scale, shift) = self.affine();
        let mut y = x.clone();
        for row in y.data_mut().chunks_exact_mut(c) {
            for ch in 0..c {
                row[ch] = row[ch] * scale[ch] + shift[ch];
            }
        }
        Ok(y)
    }

    /// Inference-mode map folded into `x · scale + shift`.
    pub fn affine(&self) -> (Vec<T>, Vec<T>) {
        let scale: Vec<T> = (0..self.channels())
            .map(|ch| self.gamma[ch] / (self.running_var[ch] + self.epsilon).sqrt())
            .collect();
        let shift = (0..self.channels())
            .map(|ch| self.beta[ch] - self.running_mean[ch] * scale[ch])
            .collect();
        (scale, shift)
    }

    pub fn backward(&self, grad_out: &Tensor3<T>, cache: &BnCache<T>) -> Result<(Tensor3<T>, BnGrads<T>)> {
        self.check(grad_out)?;
        if grad_out.data().len() != cache.xhat.len() {
            return Err(Error::shape("batch norm gradient does not match the forward pass"));
        }
        let c = self.channels();
        let count = T::lit((grad_out.batch() * grad_out.len()) as f64);
        let mut dgamma = vec![T::zero(); c];
        let mut dbeta = vec![T::zero(); c];
        for (gr, hr) in grad_out.data().chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
            for ch in 0..c {
                dgamma[ch] += gr[ch] * hr[ch];
                dbeta[ch] += gr[ch];
            }
        }
        let coef: Vec<T> = (0..c).map(|ch| self.gamma[ch] * cache.inv_std[ch] / count).collect();
        let mut dx = vec![T::zero(); cache.xhat.len()];
        for ((dr, gr), hr) in dx
            .chunks_exact_mut(c)
            .zip(grad_out.data().chunks_exact(c))
            .zip(cache.xhat.chunks_exact(c))
        {
            for ch in 0..c {
                dr[ch] = coef[ch] * (count * gr[ch] - dbeta[ch] - hr[ch] * dgamma[ch]);
            }
        }
        let (b, l, _) = grad_out.dims();
        Ok((
            Tensor3::new(b, l, c, dx)?,
            BnGrads {
                gamma: dgamma,
                beta: dbeta,
            },
        ))
    }
}
