use crate::error::{Error, Result};

use super::Real;

/// Activations laid out as `(batch, length, channels)`, channels fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T> {
    batch: usize,
    len: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor3<T> {
    pub fn new(batch: usize, len: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if batch == 0 || len == 0 || channels == 0 {
            return Err(Error::shape(format!(
                "tensor dimensions must be positive, got ({batch}, {len}, {channels})"
            )));
        }
        if data.len() != batch * len * channels {
            return Err(Error::shape(format!(
                "{} elements for shape ({batch}, {len}, {channels})",
                data.len()
            )));
        }
        Ok(Self {
            batch,
            len,
            channels,
            data,
        })
    }

    pub fn zeros(batch: usize, len: usize, channels: usize) -> Self {
        Self::new(batch, len, channels, vec![T::zero(); batch * len * channels])
            .expect("positive dimensions")
    }

    /// Single-channel tensor from `batch` rows of `len` samples each.
    pub fn from_rows(rows: &[f64], len: usize) -> Result<Self> {
        if len == 0 || rows.len() % len != 0 {
            return Err(Error::shape(format!(
                "{} samples do not split into rows of {len}",
                rows.len()
            )));
        }
        Self::new(rows.len() / len, len, 1, rows.iter().map(|&v| T::lit(v)).collect())
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.batch, self.len, self.channels)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn at(&self, b: usize, i: usize, c: usize) -> T {
        self.data[(b * self.len + i) * self.channels + c]
    }

    /// Rows `start..start + count` of the batch.
    pub fn slice_batch(&self, start: usize, count: usize) -> Result<Self> {
        if start + count > self.batch {
            return Err(Error::shape("batch slice out of range"));
        }
        let stride = self.len * self.channels;
        Self::new(
            count,
            self.len,
            self.channels,
            self.data[start * stride..(start + count) * stride].to_vec(),
        )
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
