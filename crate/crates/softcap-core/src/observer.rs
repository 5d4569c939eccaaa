//! Trajectory drift cues and risk scoring.
//!
//! Four low-cost cues measure how far the current trajectory has drifted
//! from the latest Full anchor:
//!
//! - magnitude drift: relative L1 change of the layer input from the anchor,
//! - directional drift: one minus the cosine between the vectorized inputs,
//! - anchor deviation: cache distance normalized by the maximum skip,
//! - temporal volatility: RMS of the anchor's first-order difference.
//!
//! Each cue is normalized by a fixed constant and clipped to `[0, 1]`, then
//! fused into a weighted base score. An optional positive-increment term
//! amplifies upward changes of the base score while leaving decreases
//! unchanged.

use alloc::format;

use serde::Serialize;

use crate::cache::AnchorState;
use crate::error::{Error, Result};
use crate::math;
use crate::tensor::FeatureTensor;

/// One value per drift cue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cues {
    pub magnitude: f64,
    pub direction: f64,
    pub anchor: f64,
    pub volatility: f64,
}

impl Cues {
    pub const fn new(magnitude: f64, direction: f64, anchor: f64, volatility: f64) -> Self {
        Self {
            magnitude,
            direction,
            anchor,
            volatility,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.magnitude, self.direction, self.anchor, self.volatility]
    }

    fn sum(&self) -> f64 {
        self.magnitude + self.direction + self.anchor + self.volatility
    }
}

/// Default normalization constants, calibrated once and held fixed.
pub const DEFAULT_NORM_CONSTANTS: Cues = Cues::new(0.5, 0.08, 0.5, 4.0);
/// Default fusion weights (must sum to one).
pub const DEFAULT_WEIGHTS: Cues = Cues::new(0.45, 0.25, 0.15, 0.15);
/// Default divide-by-zero guard.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Default positive-increment gain, used when the switch is on.
pub const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverConfig {
    pub norm_constants: Cues,
    pub weights: Cues,
    pub epsilon: f64,
    pub gamma: f64,
    pub increment_enabled: bool,
}

impl ObserverConfig {
    /// Validating constructor. Weights that do not already sum to one are
    /// rejected, not rescaled.
    pub fn new(
        norm_constants: Cues,
        weights: Cues,
        epsilon: f64,
        gamma: f64,
        increment_enabled: bool,
    ) -> Result<Self> {
        for c in norm_constants.as_array() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config("normalization constants must be positive".into()));
            }
        }
        for w in weights.as_array() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config("cue weights must be nonnegative".into()));
            }
        }
        let sum = weights.sum();
        if math::abs(sum - 1.0) > 1e-9 {
            return Err(Error::Config(format!(
                "cue weights must sum to 1 (got {sum}); rescale them explicitly"
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::Config("increment gain must be nonnegative".into()));
        }
        Ok(Self {
            norm_constants,
            weights,
            epsilon,
            gamma,
            increment_enabled,
        })
    }
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            norm_constants: DEFAULT_NORM_CONSTANTS,
            weights: DEFAULT_WEIGHTS,
            epsilon: DEFAULT_EPSILON,
            gamma: DEFAULT_GAMMA,
            increment_enabled: false,
        }
    }
}

/// Raw cues, their normalized values, and the fused risk score for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskReport {
    pub raw: Cues,
    pub normalized: Cues,
    /// Weighted sum of the normalized cues, in `[0, 1]`.
    pub base: f64,
    /// Positive part of the base-score change since the previous step.
    pub increment: f64,
    /// Final risk, in `[0, 1]`.
    pub score: f64,
}

/// Relative L1 amplitude change from the anchor input.
pub fn magnitude_drift(
    current: &FeatureTensor,
    anchor_input: &FeatureTensor,
    epsilon: f64,
) -> Result<f64> {
    let diff = current.sub(anchor_input)?;
    Ok(diff.l1_norm() / (current.l1_norm() + epsilon))
}

/// One minus the cosine similarity of the vectorized inputs; range `[0, 2]`
/// up to epsilon slack.
pub fn directional_drift(
    current: &FeatureTensor,
    anchor_input: &FeatureTensor,
    epsilon: f64,
) -> Result<f64> {
    let dot = current.dot(anchor_input)?;
    let denom = math::sqrt(current.l2_norm_sq()) * math::sqrt(anchor_input.l2_norm_sq()) + epsilon;
    Ok(1.0 - dot / denom)
}

/// Cache distance normalized by the maximum skip, saturating at one.
pub fn anchor_deviation(distance: usize, max_skip: usize) -> f64 {
    let ratio = distance as f64 / max_skip as f64;
    if ratio > 1.0 {
        1.0
    } else {
        ratio
    }
}

/// RMS of the anchor's first-order difference; zero while only one Full has
/// been seen.
pub fn temporal_volatility(anchor: &AnchorState) -> f64 {
    match anchor.first_diff() {
        Some(diff) => math::sqrt(diff.l2_norm_sq() / diff.len() as f64),
        None => 0.0,
    }
}

/// Normalizes and fuses raw cues into a [`RiskReport`].
///
/// `prev_base` is the previous step's base score; the positive increment is
/// zero when it is absent. With the increment switch off the score equals
/// the base score exactly.
pub fn score(raw: Cues, prev_base: Option<f64>, cfg: &ObserverConfig) -> RiskReport {
    let c = &cfg.norm_constants;
    let normalized = Cues {
        magnitude: clip01(raw.magnitude / c.magnitude),
        direction: clip01(raw.direction / c.direction),
        anchor: clip01(raw.anchor / c.anchor),
        volatility: clip01(raw.volatility / c.volatility),
    };
    let w = &cfg.weights;
    let base = w.magnitude * normalized.magnitude
        + w.direction * normalized.direction
        + w.anchor * normalized.anchor
        + w.volatility * normalized.volatility;
    let increment = match prev_base {
        Some(prev) => (base - prev).max(0.0),
        None => 0.0,
    };
    let score = if cfg.increment_enabled {
        clip01(base + cfg.gamma * increment)
    } else {
        base
    };
    RiskReport {
        raw,
        normalized,
        base,
        increment,
        score,
    }
}

/// Computes all four cues against the anchor and fuses them.
pub fn assess(
    current: &FeatureTensor,
    anchor: &AnchorState,
    step: usize,
    max_skip: usize,
    prev_base: Option<f64>,
    cfg: &ObserverConfig,
) -> Result<RiskReport> {
    let distance = anchor.cache_distance(step)?;
    let raw = Cues {
        magnitude: magnitude_drift(current, anchor.feature(), cfg.epsilon)?,
        direction: directional_drift(current, anchor.feature(), cfg.epsilon)?,
        anchor: anchor_deviation(distance, max_skip),
        volatility: temporal_volatility(anchor),
    };
    Ok(score(raw, prev_base, cfg))
}

/// Report used before any anchor exists: every cue saturates at its
/// normalization threshold, so the score is maximal and a Full evaluation
/// is forced through the ordinary gate.
pub fn saturated_report(prev_base: Option<f64>, cfg: &ObserverConfig) -> RiskReport {
    score(cfg.norm_constants, prev_base, cfg)
}

fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}
