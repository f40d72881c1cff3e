//! ReLU and the dense sigmoid output layer.

use rand::Rng;

use super::real::{gemm, View};
use super::{Real, Tensor3};
use crate::error::{Error, Result};

pub fn relu<T: Real>(x: &Tensor3<T>) -> Tensor3<T> {
    let mut y = x.clone();
    for v in y.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    y
}

/// Gradient through ReLU given its forward output.
pub fn relu_backward<T: Real>(grad_out: &Tensor3<T>, output: &Tensor3<T>) -> Result<Tensor3<T>> {
    if grad_out.dims() != output.dims() {
        return Err(Error::shape("ReLU gradient shape differs from its output"));
    }
    let mut g = grad_out.clone();
    for (gv, &o) in g.data_mut().iter_mut().zip(output.data()) {
        if o <= T::zero() {
            *gv = T::zero();
        }
    }
    Ok(g)
}

/// Logistic function evaluated without overflow, kept strictly inside (0, 1).
pub fn sigmoid<T: Real>(z: T) -> T {
    let p = if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    };
    if p.is_nan() {
        return p;
    }
    let half_ulp = T::epsilon() / T::lit(2.0);
    p.max(T::min_positive_value()).min(T::one() - half_ulp)
}

/// Fully connected layer from the flattened `(length × channels)` features to
/// `outputs` sigmoid units.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSigmoid<T> {
    inputs: usize,
    outputs: usize,
    /// `(inputs, outputs)` row-major.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> DenseSigmoid<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::invalid("dense layer dimensions must be positive"));
        }
        Ok(Self {
            inputs,
            outputs,
            weight: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut layer = Self::zeros(inputs, outputs)?;
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        for w in &mut layer.weight {
            *w = T::lit(rng.random_range(-limit..limit));
        }
        Ok(layer)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    fn flat_batch(&self, x: &Tensor3<T>) -> Result<usize> {
        let features = x.len() * x.channels();
        if features != self.inputs {
            return Err(Error::shape(format!(
                "dense layer expects {} features, got {features}",
                self.inputs
            )));
        }
        Ok(x.batch())
    }

    /// Posteriors, `(batch, outputs)` row-major.
    pub fn forward(&self, x: &Tensor3<T>) -> Result<Vec<T>> {
        let batch = self.flat_batch(x)?;
        let mut z = Vec::with_capacity(batch * self.outputs);
        for _ in 0..batch {
            z.extend_from_slice(&self.bias);
        }
        gemm(
            T::one(),
            View::row_major(x.data(), batch, self.inputs),
            View::row_major(&self.weight, self.inputs, self.outputs),
            T::one(),
            &mut z,
        );
        for v in &mut z {
            *v = sigmoid(*v);
        }
        Ok(z)
    }

    /// Gradients given the layer input, its posteriors and `dL/dposterior`.
    pub fn backward(&self, x: &Tensor3<T>, posteriors: &[T], grad: &[T]) -> Result<(Tensor3<T>, DenseGrads<T>)> {
        let batch = self.flat_batch(x)?;
        if posteriors.len() != batch * self.outputs || grad.len() != posteriors.len() {
            return Err(Error::shape("dense gradient does not match the forward pass"));
        }
        let dz: Vec<T> = posteriors
            .iter()
            .zip(grad)
            .map(|(&p, &g)| g * p * (T::one() - p))
            .collect();
        let dz_view = View::row_major(&dz, batch, self.outputs);
        let mut gw = vec![T::zero(); self.inputs * self.outputs];
        gemm(T::one(), View::row_major(x.data(), batch, self.inputs).t(), dz_view, T::zero(), &mut gw);
        let mut gb = vec![T::zero(); self.outputs];
        for row in dz.chunks_exact(self.outputs) {
            for (acc, &v) in gb.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let mut gx = vec![T::zero(); batch * self.inputs];
        gemm(
            T::one(),
            dz_view,
            View::row_major(&self.weight, self.inputs, self.outputs).t(),
            T::zero(),
            &mut gx,
        );
        let (b, l, c) = x.dims();
        Ok((Tensor3::new(b, l, c, gx)?, DenseGrads { weight: gw, bias: gb }))
    }
}
