//! 1-D "same" convolution with zero padding.
//!
//! For kernel size `k` the input is padded with `(k - 1) / 2` zeros on the
//! left and the rest on the right, so even kernels get the extra zero on the
//! right. Each output row `(b, i)` is the dot product of the contiguous padded
//! window `x[b, i .. i + k, :]` with the kernel, which lets the forward pass
//! and both gradients run as strided matrix products with no im2col copy.

use rand::Rng;

use super::real::{gemm, View};
use super::{Real, Tensor3};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d<T> {
    kernel: usize,
    in_channels: usize,
    out_channels: usize,
    /// `(k, in, out)` row-major.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Saved forward state: the zero-padded input.
#[derive(Clone, Debug)]
pub struct ConvCache<T> {
    padded: Vec<T>,
    batch: usize,
    len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Conv1d<T> {
    pub fn zeros(kernel: usize, in_channels: usize, out_channels: usize) -> Result<Self> {
        if kernel == 0 || in_channels == 0 || out_channels == 0 {
            return Err(Error::invalid("convolution dimensions must be positive"));
        }
        Ok(Self {
            kernel,
            in_channels,
            out_channels,
            weight: vec![T::zero(); kernel * in_channels * out_channels],
            bias: vec![T::zero(); out_channels],
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(kernel: usize, in_channels: usize, out_channels: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut layer = Self::zeros(kernel, in_channels, out_channels)?;
        let limit = (6.0 / ((kernel * (in_channels + out_channels)) as f64)).sqrt();
        for w in &mut layer.weight {
            *w = T::lit(rng.random_range(-limit..limit));
        }
        Ok(layer)
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn pad_left(&self) -> usize {
        (self.kernel - 1) / 2
    }

    fn padded_len(&self, len: usize) -> usize {
        len + self.kernel - 1
    }

    fn window_rows<'a>(&self, padded: &'a [T], len: usize, b: usize) -> View<'a, T> {
        let cin = self.in_channels;
        let start = b * self.padded_len(len) * cin;
        View {
            data: &padded[start..start + self.padded_len(len) * cin],
            rows: len,
            cols: self.kernel * cin,
            rs: cin,
            cs: 1,
        }
    }

    pub fn forward(&self, x: &Tensor3<T>) -> Result<(Tensor3<T>, ConvCache<T>)> {
        let (batch, len, cin) = x.dims();
        if cin != self.in_channels {
            return Err(Error::shape(format!(
                "convolution expects {} input channels, got {cin}",
                self.in_channels
            )));
        }
        let plen = self.padded_len(len);
        let left = self.pad_left();
        let mut padded = vec![T::zero(); batch * plen * cin];
        for b in 0..batch {
            let src = &x.data()[b * len * cin..(b + 1) * len * cin];
            let dst = (b * plen + left) * cin;
            padded[dst..dst + len * cin].copy_from_slice(src);
        }
        let cout = self.out_channels;
        let mut out = vec![T::zero(); batch * len * cout];
        let w = View::row_major(&self.weight, self.kernel * cin, cout);
        for b in 0..batch {
            let o = &mut out[b * len * cout..(b + 1) * len * cout];
            for row in o.chunks_exact_mut(cout) {
                row.copy_from_slice(&self.bias);
            }
            gemm(T::one(), self.window_rows(&padded, len, b), w, T::one(), o);
        }
        Ok((
            Tensor3::new(batch, len, cout, out)?,
            ConvCache { padded, batch, len },
        ))
    }

    /// Gradients of the forward map; the input gradient is skipped unless requested.
    pub fn backward(
        &self,
        grad_out: &Tensor3<T>,
        cache: &ConvCache<T>,
        input_grad: bool,
    ) -> Result<(Option<Tensor3<T>>, ConvGrads<T>)> {
        let (batch, len, cout) = grad_out.dims();
        if batch != cache.batch || len != cache.len || cout != self.out_channels {
            return Err(Error::shape("convolution gradient does not match the forward pass"));
        }
        let (k, cin) = (self.kernel, self.in_channels);
        let g = grad_out.data();

        let mut gw = vec![T::zero(); k * cin * cout];
        let mut gb = vec![T::zero(); cout];
        for b in 0..batch {
            let gout = View::row_major(&g[b * len * cout..(b + 1) * len * cout], len, cout);
            gemm(T::one(), self.window_rows(&cache.padded, len, b).t(), gout, T::one(), &mut gw);
        }
        for row in g.chunks_exact(cout) {
            for (acc, &v) in gb.iter_mut().zip(row) {
                *acc += v;
            }
        }

        let grad_in = if input_grad {
            // grad_x[j, c] = Σ_{s, o} gpad[j + s, o] · w[k - 1 - s, c, o]
            // with gpad = grad_out padded by pad_right zeros on the left.
            let right = k - 1 - self.pad_left();
            let plen = self.padded_len(len);
            let mut gpad = vec![T::zero(); batch * plen * cout];
            for b in 0..batch {
                let dst = (b * plen + right) * cout;
                gpad[dst..dst + len * cout].copy_from_slice(&g[b * len * cout..(b + 1) * len * cout]);
            }
            let mut flipped = vec![T::zero(); k * cout * cin];
            for s in 0..k {
                for o in 0..cout {
                    for c in 0..cin {
                        flipped[(s * cout + o) * cin + c] = self.weight[((k - 1 - s) * cin + c) * cout + o];
                    }
                }
            }
            let wf = View::row_major(&flipped, k * cout, cin);
            let mut gx = vec![T::zero(); batch * len * cin];
            for b in 0..batch {
                let rows = View {
                    data: &gpad[b * plen * cout..(b + 1) * plen * cout],
                    rows: len,
                    cols: k * cout,
                    rs: cout,
                    cs: 1,
                };
                gemm(T::one(), rows, wf, T::zero(), &mut gx[b * len * cin..(b + 1) * len * cin]);
            }
            Some(Tensor3::new(batch, len, cin, gx)?)
        } else {
            None
        };
        Ok((grad_in, ConvGrads { weight: gw, bias: gb }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel() {
        let mut conv = Conv1d::<f64>::zeros(1, 1, 1).unwrap();
        conv.weight[0] = 1.0;
        let x = Tensor3::new(2, 3, 1, vec![1.0, -2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(conv.forward(&x).unwrap().0, x);
    }

    #[test]
    fn hand_convolution_with_zero_edges() {
        let mut conv = Conv1d::<f64>::zeros(3, 1, 1).unwrap();
        conv.weight.fill(1.0);
        let x = Tensor3::new(1, 3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(conv.forward(&x).unwrap().0.data(), &[3.0, 6.0, 5.0]);
    }

    #[test]
    fn even_kernel_pads_right() {
        // k = 2, weights (tap0, tap1) = (1, 10): y[i] = x[i] + 10·x[i + 1]
        let mut conv = Conv1d::<f64>::zeros(2, 1, 1).unwrap();
        conv.weight.copy_from_slice(&[1.0, 10.0]);
        let x = Tensor3::new(1, 3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(conv.forward(&x).unwrap().0.data(), &[21.0, 32.0, 3.0]);
    }

    #[test]
    fn channel_mismatch() {
        let conv = Conv1d::<f32>::zeros(3, 2, 4).unwrap();
        assert!(conv.forward(&Tensor3::zeros(1, 5, 3)).is_err());
    }
}
