//! Anchor state and finite-difference feature extrapolation.
//!
//! A Full step refreshes the anchor: the newest Full feature is pushed into
//! a ring of the last `order + 1` Full features and the backward
//! finite-difference stack is rebuilt over them in arrival order. A Cache
//! step extrapolates from the anchor:
//!
//! ```text
//! approx(t) = h_a + sum_r alpha_r(t - a) * diff_r
//! ```
//!
//! Two coefficient schemes are provided. `newton-forward` uses the rising
//! binomial `alpha_r(d) = C(d + r - 1, r)`, which extends the polynomial
//! interpolating the stored history and is therefore exact on polynomial
//! sequences of degree at most `order`. `factorial-taylor` uses
//! `alpha_r(d) = d^r / r!`, treating the differences as derivative
//! estimates.
//!
//! Differences are defined over the sequence of Full evaluations in arrival
//! order, ignoring the step gaps between them; this is a declared
//! approximation (Full steps arrive at irregular spacing under the policy).

use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::FeatureTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientScheme {
    NewtonForward,
    FactorialTaylor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheConfig {
    /// Finite-difference order `m >= 1`.
    pub order: usize,
    /// Hard bound on the cache distance; exceeding it is a guard violation.
    pub max_skip: usize,
    pub scheme: CoefficientScheme,
}

impl CacheConfig {
    pub fn new(order: usize, max_skip: usize, scheme: CoefficientScheme) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("finite-difference order must be at least 1".into()));
        }
        if max_skip == 0 {
            return Err(Error::Config("maximum skip must be at least 1".into()));
        }
        Ok(Self {
            order,
            max_skip,
            scheme,
        })
    }
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            order: 2,
            max_skip: 10,
            scheme: CoefficientScheme::NewtonForward,
        }
    }
}

/// The latest Full anchor: step index, the stored Full features, and the
/// backward finite-difference stack rebuilt at every refresh.
///
/// Difference orders beyond the available history are absent, not
/// zero-filled: after `k + 1` refreshes at most `min(order, k)` differences
/// exist.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorState {
    anchor_step: usize,
    order: usize,
    /// Last `order + 1` Full features, oldest first; never empty.
    history: Vec<FeatureTensor>,
    /// `diff_r` at index `r - 1`.
    diffs: Vec<FeatureTensor>,
}

impl AnchorState {
    /// Creates the anchor from the first Full evaluation. No differences
    /// exist yet.
    pub fn new(step: usize, feature: FeatureTensor, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("finite-difference order must be at least 1".into()));
        }
        Ok(Self {
            anchor_step: step,
            order,
            history: vec![feature],
            diffs: Vec::new(),
        })
    }

    /// Refreshes the anchor with the Full feature computed at `step`.
    pub fn refresh(&mut self, step: usize, feature: FeatureTensor) -> Result<()> {
        self.history[0].check_shape(&feature)?;
        self.history.push(feature);
        while self.history.len() > self.order + 1 {
            self.history.remove(0);
        }
        self.anchor_step = step;
        self.rebuild_diffs();
        Ok(())
    }

    fn rebuild_diffs(&mut self) {
        self.diffs.clear();
        let mut level = self.history.clone();
        while self.diffs.len() < self.order && level.len() >= 2 {
            let next: Vec<FeatureTensor> =
                level.windows(2).map(|w| w[1].sub_raw(&w[0])).collect();
            self.diffs.push(next.last().expect("level has >= 2 entries").clone());
            level = next;
        }
    }

    pub fn anchor_step(&self) -> usize {
        self.anchor_step
    }

    /// The anchor feature `h_a` (also the stored comparison input for the
    /// drift cues).
    pub fn feature(&self) -> &FeatureTensor {
        self.history.last().expect("history is never empty")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn diffs(&self) -> &[FeatureTensor] {
        &self.diffs
    }

    /// First-order difference, when at least two Full features are stored.
    pub fn first_diff(&self) -> Option<&FeatureTensor> {
        self.diffs.first()
    }

    /// Steps elapsed since the anchor.
    pub fn cache_distance(&self, step: usize) -> Result<usize> {
        if step < self.anchor_step {
            return Err(Error::StepOrder {
                anchor: self.anchor_step,
                step,
            });
        }
        Ok(step - self.anchor_step)
    }

    /// Extrapolates the feature at `step > anchor_step` using the available
    /// difference orders. With no differences stored the anchor feature is
    /// returned unchanged.
    pub fn approximate(&self, step: usize, cfg: &CacheConfig) -> Result<FeatureTensor> {
        if step <= self.anchor_step {
            return Err(Error::StepOrder {
                anchor: self.anchor_step,
                step,
            });
        }
        let distance = step - self.anchor_step;
        if distance > cfg.max_skip {
            return Err(Error::SkipGuard {
                distance,
                max_skip: cfg.max_skip,
            });
        }
        let mut out = self.feature().clone();
        for (idx, diff) in self.diffs.iter().enumerate() {
            let coef = match cfg.scheme {
                CoefficientScheme::NewtonForward => newton_forward_coefficient(distance, idx + 1),
                CoefficientScheme::FactorialTaylor => {
                    factorial_taylor_coefficient(distance, idx + 1)
                }
            };
            out.axpy(coef, diff);
        }
        Ok(out)
    }
}

/// Rising binomial `C(d + r - 1, r)`; integral at every build step, so the
/// f64 value is exact for all realistic `d` and `r`.
fn newton_forward_coefficient(distance: usize, order: usize) -> f64 {
    let mut acc = 1.0;
    for i in 1..=order {
        acc = acc * (distance + i - 1) as f64 / i as f64;
    }
    acc
}

/// `d^r / r!`.
fn factorial_taylor_coefficient(distance: usize, order: usize) -> f64 {
    let mut acc = 1.0;
    for i in 1..=order {
        acc = acc * distance as f64 / i as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> FeatureTensor {
        FeatureTensor::new(vec![v], 1, 1).unwrap()
    }

    #[test]
    fn first_refresh_has_no_diffs() {
        let anchor = AnchorState::new(0, scalar(1.0), 3).unwrap();
        assert!(anchor.diffs().is_empty());
        assert!(anchor.first_diff().is_none());
    }

    #[test]
    fn identical_features_give_zero_first_diff() {
        let mut anchor = AnchorState::new(0, scalar(2.5), 2).unwrap();
        anchor.refresh(1, scalar(2.5)).unwrap();
        assert_eq!(anchor.diffs().len(), 1);
        assert_eq!(anchor.first_diff().unwrap().data(), &[0.0]);
    }

    #[test]
    fn diffs_match_hand_finite_differences() {
        // Fulls 0, 1, 4 at consecutive steps: diff1 = 3, diff2 = 2.
        let mut anchor = AnchorState::new(0, scalar(0.0), 2).unwrap();
        anchor.refresh(1, scalar(1.0)).unwrap();
        anchor.refresh(2, scalar(4.0)).unwrap();
        assert_eq!(anchor.diffs().len(), 2);
        assert_eq!(anchor.diffs()[0].data(), &[3.0]);
        assert_eq!(anchor.diffs()[1].data(), &[2.0]);
    }

    #[test]
    fn history_ring_keeps_order_plus_one() {
        let mut anchor = AnchorState::new(0, scalar(0.0), 1).unwrap();
        anchor.refresh(1, scalar(1.0)).unwrap();
        anchor.refresh(2, scalar(4.0)).unwrap();
        // Order 1: only the last two Fulls are retained.
        assert_eq!(anchor.diffs().len(), 1);
        assert_eq!(anchor.diffs()[0].data(), &[3.0]);
    }

    #[test]
    fn refresh_rejects_shape_mismatch() {
        let mut anchor = AnchorState::new(0, scalar(0.0), 2).unwrap();
        let wide = FeatureTensor::new(vec![1.0, 2.0], 1, 2).unwrap();
        assert!(matches!(
            anchor.refresh(1, wide),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn one_step_extrapolation_adds_first_diff_in_both_schemes() {
        // Two Fulls stored: only diff1 is available.
        for scheme in [
            CoefficientScheme::NewtonForward,
            CoefficientScheme::FactorialTaylor,
        ] {
            let cfg = CacheConfig::new(2, 10, scheme).unwrap();
            let mut anchor = AnchorState::new(0, scalar(1.0), 2).unwrap();
            anchor.refresh(1, scalar(4.0)).unwrap();
            let approx = anchor.approximate(2, &cfg).unwrap();
            assert_eq!(approx.data(), &[4.0 + 3.0]);
        }
    }

    #[test]
    fn newton_extends_the_interpolating_quadratic() {
        // Fulls 0, 1, 4 are t^2 at t = 0, 1, 2; extending the quadratic two
        // steps past the anchor gives 16 (direct polynomial extension
        // oracle).
        let cfg = CacheConfig::default();
        let mut anchor = AnchorState::new(0, scalar(0.0), 2).unwrap();
        anchor.refresh(1, scalar(1.0)).unwrap();
        anchor.refresh(2, scalar(4.0)).unwrap();
        let approx = anchor.approximate(4, &cfg).unwrap();
        assert_eq!(approx.data(), &[16.0]);
    }

    #[test]
    fn factorial_taylor_matches_hand_formula() {
        // h_a = 4, diff1 = 3, diff2 = 2, d = 2: 4 + 2*3 + (4/2)*2 = 14.
        let cfg = CacheConfig::new(2, 10, CoefficientScheme::FactorialTaylor).unwrap();
        let mut anchor = AnchorState::new(0, scalar(0.0), 2).unwrap();
        anchor.refresh(1, scalar(1.0)).unwrap();
        anchor.refresh(2, scalar(4.0)).unwrap();
        let approx = anchor.approximate(4, &cfg).unwrap();
        assert_eq!(approx.data(), &[14.0]);
    }

    #[test]
    fn empty_diffs_fall_back_to_anchor_feature() {
        let cfg = CacheConfig::default();
        let anchor = AnchorState::new(3, scalar(7.0), 2).unwrap();
        let approx = anchor.approximate(4, &cfg).unwrap();
        assert_eq!(approx.data(), &[7.0]);
    }

    #[test]
    fn approximate_rejects_non_future_steps() {
        let cfg = CacheConfig::default();
        let anchor = AnchorState::new(5, scalar(1.0), 2).unwrap();
        assert!(matches!(
            anchor.approximate(5, &cfg),
            Err(Error::StepOrder { .. })
        ));
        assert!(matches!(
            anchor.approximate(4, &cfg),
            Err(Error::StepOrder { .. })
        ));
    }

    #[test]
    fn approximate_rejects_distance_beyond_max_skip() {
        let cfg = CacheConfig::new(2, 3, CoefficientScheme::NewtonForward).unwrap();
        let anchor = AnchorState::new(0, scalar(1.0), 2).unwrap();
        assert!(matches!(
            anchor.approximate(4, &cfg),
            Err(Error::SkipGuard {
                distance: 4,
                max_skip: 3
            })
        ));
    }

    #[test]
    fn cache_distance_examples() {
        let mut anchor = AnchorState::new(4, scalar(1.0), 2).unwrap();
        assert_eq!(anchor.cache_distance(4).unwrap(), 0);
        assert_eq!(anchor.cache_distance(7).unwrap(), 3);
        assert!(matches!(
            anchor.cache_distance(3),
            Err(Error::StepOrder { .. })
        ));
        anchor.refresh(9, scalar(2.0)).unwrap();
        assert_eq!(anchor.cache_distance(9).unwrap(), 0);
    }

    #[test]
    fn approximate_preserves_shape() {
        let cfg = CacheConfig::default();
        let feat = FeatureTensor::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2, 3).unwrap();
        let mut anchor = AnchorState::new(0, feat.clone(), 2).unwrap();
        anchor.refresh(1, feat).unwrap();
        let approx = anchor.approximate(3, &cfg).unwrap();
        assert_eq!(approx.shape(), (2, 3));
    }

    #[test]
    fn newton_coefficients_are_rising_binomials() {
        assert_eq!(newton_forward_coefficient(1, 1), 1.0);
        assert_eq!(newton_forward_coefficient(2, 1), 2.0);
        assert_eq!(newton_forward_coefficient(2, 2), 3.0); // C(3, 2)
        assert_eq!(newton_forward_coefficient(3, 2), 6.0); // C(4, 2)
        assert_eq!(newton_forward_coefficient(3, 3), 10.0); // C(5, 3)
    }

    #[test]
    fn config_validation() {
        assert!(CacheConfig::new(0, 5, CoefficientScheme::NewtonForward).is_err());
        assert!(CacheConfig::new(2, 0, CoefficientScheme::NewtonForward).is_err());
    }
}
