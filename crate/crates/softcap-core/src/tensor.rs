//! Flat hidden-state tensors driving the decision loop.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math;

/// A real-valued hidden-state snapshot laid out row-major as
/// `tokens x channels`.
///
/// Every entry is finite; constructors reject NaN and infinities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureTensor {
    data: Vec<f64>,
    tokens: usize,
    channels: usize,
}

impl FeatureTensor {
    pub fn new(data: Vec<f64>, tokens: usize, channels: usize) -> Result<Self> {
        if tokens == 0 || channels == 0 {
            return Err(Error::Config("tensor dimensions must be positive".into()));
        }
        if data.len() != tokens * channels {
            return Err(Error::Config(format!(
                "data length {} does not match tokens*channels = {}",
                data.len(),
                tokens * channels
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("tensor entries must be finite".into()));
        }
        Ok(Self {
            data,
            tokens,
            channels,
        })
    }

    pub fn zeros(tokens: usize, channels: usize) -> Result<Self> {
        Self::new(vec![0.0; tokens * channels], tokens, channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.tokens, self.channels)
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(())
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| math::abs(*v)).sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Inner product; shapes must already match.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.sub_raw(other))
    }

    /// Elementwise difference without a shape check; callers guarantee
    /// matching shapes.
    pub(crate) fn sub_raw(&self, other: &Self) -> Self {
        debug_assert_eq!(self.shape(), other.shape());
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
            tokens: self.tokens,
            channels: self.channels,
        }
    }

    /// `self += coef * other`, shapes guaranteed by the caller.
    pub(crate) fn axpy(&mut self, coef: f64, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += coef * b;
        }
    }

    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        let sq: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(math::sqrt(sq))
    }
}
