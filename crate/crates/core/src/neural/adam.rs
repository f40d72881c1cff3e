use serde::{Deserialize, Serialize};

use super::Real;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for a fixed list of parameter tensors.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
    step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        Self {
            config,
            first: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            second: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.config.learning_rate = lr;
    }
}

/// One bias-corrected Adam update. Nothing is modified if any gradient is
/// non-finite or the shapes disagree with the state.
pub fn adam_step<T: Real>(params: &mut [&mut [T]], grads: &[&[T]], state: &mut AdamState<T>) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first.len() {
        return Err(Error::shape(format!(
            "{} parameter tensors, {} gradients, {} optimizer slots",
            params.len(),
            grads.len(),
            state.first.len()
        )));
    }
    for (i, ((p, g), m)) in params.iter().zip(grads).zip(&state.first).enumerate() {
        if p.len() != g.len() || p.len() != m.len() {
            return Err(Error::shape(format!("tensor {i}: parameter/gradient/state sizes differ")));
        }
        if let Some(j) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient {i}[{j}] = {:?}", g[j])));
        }
    }
    state.step += 1;
    let c = state.config;
    let t = state.step as i32;
    let b1 = T::lit(c.beta1);
    let b2 = T::lit(c.beta2);
    let one = T::one();
    let correct1 = T::lit(1.0 - c.beta1.powi(t));
    let correct2 = T::lit(1.0 - c.beta2.powi(t));
    let lr = T::lit(c.learning_rate);
    let eps = T::lit(c.epsilon);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + (one - b1) * gi;
            v[i] = b2 * v[i] + (one - b2) * gi * gi;
            let mhat = m[i] / correct1;
            let vhat = v[i] / correct2;
            p[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![1.0f64, -2.0];
        let mut st = AdamState::new(AdamConfig::default(), &[2]);
        adam_step(&mut [&mut p], &[&[0.0, 0.0]], &mut st).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(st.step(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![0.0f64];
        let mut st = AdamState::new(AdamConfig::default(), &[1]);
        adam_step(&mut [&mut p], &[&[4.0]], &mut st).unwrap();
        let expected = -1e-3 * 4.0 / (4.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] + 0.001).abs() < 1e-7);
    }

    #[test]
    fn two_steps_match_hand_recurrence() {
        let g = 0.3f64;
        let mut p = vec![0.5f64];
        let mut st = AdamState::new(AdamConfig::default(), &[1]);
        adam_step(&mut [&mut p], &[&[g]], &mut st).unwrap();
        adam_step(&mut [&mut p], &[&[g]], &mut st).unwrap();

        let (b1, b2, lr, eps) = (0.9f64, 0.999f64, 1e-3, 1e-8);
        let mut theta = 0.5;
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mhat = m / (1.0 - b1.powi(t));
            let vhat = v / (1.0 - b2.powi(t));
            theta -= lr * mhat / (vhat.sqrt() + eps);
        }
        assert!((p[0] - theta).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_is_refused() {
        let mut p = vec![1.0f32];
        let mut st = AdamState::new(AdamConfig::default(), &[1]);
        let err = adam_step(&mut [&mut p], &[&[f32::NAN]], &mut st).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert_eq!(p, vec![1.0]);
        assert_eq!(st.step(), 0);
    }
}
