use super::Real;
use crate::error::{Error, Result};

/// Mean squared error between bit targets and posteriors, both `(batch, l)`
/// row-major; returns the loss and its gradient `2(p − m)/(batch·l)`.
pub fn mse_loss<T: Real>(targets: &[u8], posteriors: &[T], batch: usize, l: usize) -> Result<(T, Vec<T>)> {
    if targets.len() != batch * l || posteriors.len() != batch * l || batch * l == 0 {
        return Err(Error::shape(format!(
            "MSE over ({batch}, {l}) got {} targets and {} posteriors",
            targets.len(),
            posteriors.len()
        )));
    }
    let scale = 1.0 / (batch * l) as f64;
    let mut loss = 0.0f64;
    let grad = targets
        .iter()
        .zip(posteriors)
        .map(|(&m, &p)| {
            let d = p.as_f64() - f64::from(m);
            loss += d * d;
            T::lit(2.0 * d * scale)
        })
        .collect();
    Ok((T::lit(loss * scale), grad))
}
