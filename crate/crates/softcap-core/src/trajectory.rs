//! Synthetic hidden-state trajectories.
//!
//! The decision loop consumes only tensor statistics, so synthetic sequences
//! with controllable smoothness and burst structure exercise it faithfully.
//! Three generators are provided:
//!
//! - `polynomial`: every element follows its own polynomial in the step
//!   index, with coefficients drawn from the seed. Useful for exactness
//!   tests of the finite-difference cache engine.
//! - `smooth-noise`: a seeded Gaussian random walk (unit-scale start,
//!   `noise_scale` increments) smoothed by a trailing 3-step moving average.
//!   Produces the low-drift regime where cache steps should dominate.
//! - `regime-switching`: the same walk without smoothing, with increments
//!   amplified inside configured burst windows.
//!
//! Generation is a pure function of `(spec, seed)`; repeated calls yield
//! identical sequences. The `replay` kind is materialized by the IO layer
//! from a recorded trace file, not by [`generate`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::FeatureTensor;

/// Polynomial coefficients are quantized to this granularity so that small
/// polynomial trajectories evaluate exactly in f64 and their finite
/// differences vanish exactly.
const COEFF_GRANULARITY: f64 = (1u64 << 20) as f64;

/// Upper bound on the polynomial degree, guarding overflow in evaluation.
pub const MAX_DEGREE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    Polynomial,
    SmoothNoise,
    RegimeSwitching,
    Replay,
}

/// A burst window: steps in `[start, end)` receive increments scaled by
/// `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BurstWindow {
    pub start: usize,
    pub end: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub steps: usize,
    pub tokens: usize,
    pub channels: usize,
    /// Polynomial kind only.
    pub degree: usize,
    /// Scale of the per-step Gaussian increments (noise kinds).
    pub noise_scale: f64,
    /// Regime-switching kind only.
    pub bursts: Vec<BurstWindow>,
    pub seed: u64,
    /// Replay kind only; interpreted by the IO layer.
    pub replay_path: Option<String>,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("trajectory must have at least one step".into()));
        }
        if self.tokens == 0 || self.channels == 0 {
            return Err(Error::Config("tensor dimensions must be positive".into()));
        }
        if self.degree > MAX_DEGREE {
            return Err(Error::Config(format!(
                "polynomial degree {} exceeds the maximum {MAX_DEGREE}",
                self.degree
            )));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::Config("noise scale must be finite and nonnegative".into()));
        }
        let mut sorted: Vec<&BurstWindow> = self.bursts.iter().collect();
        sorted.sort_by_key(|b| b.start);
        for b in &sorted {
            if b.start >= b.end || b.end > self.steps {
                return Err(Error::Config(format!(
                    "burst [{}, {}) must lie within [0, {})",
                    b.start, b.end, self.steps
                )));
            }
            if !(b.amplitude.is_finite() && b.amplitude >= 0.0) {
                return Err(Error::Config("burst amplitude must be finite and nonnegative".into()));
            }
        }
        for pair in sorted.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(Error::Config(format!(
                    "bursts [{}, {}) and [{}, {}) overlap",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                )));
            }
        }
        Ok(())
    }
}

/// Draws the per-element polynomial coefficients `c_0..c_degree` for a
/// polynomial spec.
///
/// Coefficients are drawn element-major (all coefficients of element 0,
/// then element 1, ...). Trailing coefficients are uniform in `[0.5, 1.5]`
/// so every element is a polynomial of exactly `degree`; the rest are
/// uniform in `[-1, 1]`. All draws are quantized to a dyadic grid so that
/// evaluation at small integer steps is exact.
pub fn polynomial_coefficients(spec: &TrajectorySpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let elements = spec.tokens * spec.channels;
    let mut all = Vec::with_capacity(elements);
    for _ in 0..elements {
        let mut coeffs = Vec::with_capacity(spec.degree + 1);
        for k in 0..=spec.degree {
            let raw: f64 = if k < spec.degree {
                rng.random_range(-1.0..=1.0)
            } else {
                rng.random_range(0.5..=1.5)
            };
            coeffs.push(math::round(raw * COEFF_GRANULARITY) / COEFF_GRANULARITY);
        }
        all.push(coeffs);
    }
    Ok(all)
}

/// Generates the trajectory described by `spec`. Deterministic in
/// `(spec, seed)`.
pub fn generate(spec: &TrajectorySpec) -> Result<Vec<FeatureTensor>> {
    spec.validate()?;
    match spec.kind {
        TrajectoryKind::Polynomial => generate_polynomial(spec),
        TrajectoryKind::SmoothNoise => generate_smooth_noise(spec),
        TrajectoryKind::RegimeSwitching => generate_regime_switching(spec),
        TrajectoryKind::Replay => Err(Error::Config(
            "replay trajectories are materialized from a recorded trace by the IO layer".into(),
        )),
    }
}

fn generate_polynomial(spec: &TrajectorySpec) -> Result<Vec<FeatureTensor>> {
    let coeffs = polynomial_coefficients(spec)?;
    let elements = spec.tokens * spec.channels;
    let mut out = Vec::with_capacity(spec.steps);
    for t in 0..spec.steps {
        let x = t as f64;
        let mut data = Vec::with_capacity(elements);
        for c in &coeffs {
            // Horner evaluation.
            let mut acc = 0.0;
            for k in (0..c.len()).rev() {
                acc = acc * x + c[k];
            }
            data.push(acc);
        }
        out.push(FeatureTensor::new(data, spec.tokens, spec.channels)?);
    }
    Ok(out)
}

/// Per-element Gaussian walk: a unit-scale seeded start followed by
/// increments of scale `noise_scale * amplitude(t)`. Draw order is
/// element-major: the element's start value, then its `steps - 1`
/// increments.
fn gaussian_walks(spec: &TrajectorySpec, amplitude: impl Fn(usize) -> f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let elements = spec.tokens * spec.channels;
    let mut walks = Vec::with_capacity(elements);
    for _ in 0..elements {
        let mut series = Vec::with_capacity(spec.steps);
        let start: f64 = StandardNormal.sample(&mut rng);
        series.push(start);
        for t in 1..spec.steps {
            let g: f64 = StandardNormal.sample(&mut rng);
            let prev = series[t - 1];
            series.push(prev + spec.noise_scale * amplitude(t) * g);
        }
        walks.push(series);
    }
    walks
}

fn tensors_from_walks(
    spec: &TrajectorySpec,
    walks: &[Vec<f64>],
) -> Result<Vec<FeatureTensor>> {
    let mut out = Vec::with_capacity(spec.steps);
    for t in 0..spec.steps {
        let data: Vec<f64> = walks.iter().map(|w| w[t]).collect();
        out.push(FeatureTensor::new(data, spec.tokens, spec.channels)?);
    }
    Ok(out)
}

fn generate_smooth_noise(spec: &TrajectorySpec) -> Result<Vec<FeatureTensor>> {
    let mut walks = gaussian_walks(spec, |_| 1.0);
    // Trailing 3-step moving average, shorter windows at the boundary.
    for series in &mut walks {
        let raw = series.clone();
        for t in 0..raw.len() {
            let lo = t.saturating_sub(2);
            let window = &raw[lo..=t];
            series[t] = window.iter().sum::<f64>() / window.len() as f64;
        }
    }
    tensors_from_walks(spec, &walks)
}

fn generate_regime_switching(spec: &TrajectorySpec) -> Result<Vec<FeatureTensor>> {
    let bursts = spec.bursts.clone();
    let walks = gaussian_walks(spec, move |t| {
        bursts
            .iter()
            .find(|b| b.start <= t && t < b.end)
            .map(|b| b.amplitude)
            .unwrap_or(1.0)
    });
    tensors_from_walks(spec, &walks)
}
