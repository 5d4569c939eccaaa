//! Soft-budget PI threshold controller.
//!
//! The controller converts a soft ceiling on Full evaluations into a dynamic
//! risk threshold. A frozen reference profile `C(p)` tabulates the
//! cumulative Full-step fraction of a fixed-threshold reference policy over
//! normalized progress; at each step the budget-tracking error
//!
//! ```text
//! e = n_actual - C(p) * n_cap
//! ```
//!
//! drives a clamped PI update of the threshold. Overspending (positive
//! error) raises the threshold and makes Full less likely; underspending
//! lowers it. The ceiling is soft: it shapes the threshold but never forces
//! a Full evaluation.

use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};

/// Frozen lookup table of cumulative Full-step fraction over normalized
/// progress, evaluated by linear interpolation between knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceProfile {
    knots: Vec<(f64, f64)>,
}

impl ReferenceProfile {
    /// Validates that the knots are nondecreasing in both coordinates and
    /// pinned to `(0, 0)` and `(1, 1)`.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Config("profile needs at least one knot".into()));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(Error::Config("profile must start at (0, 0)".into()));
        }
        if *knots.last().expect("nonempty") != (1.0, 1.0) {
            return Err(Error::Config("profile must end at (1, 1)".into()));
        }
        for pair in knots.windows(2) {
            let ((p0, c0), (p1, c1)) = (pair[0], pair[1]);
            if !(p0.is_finite() && c0.is_finite() && p1.is_finite() && c1.is_finite()) {
                return Err(Error::Config("profile knots must be finite".into()));
            }
            if p1 < p0 || c1 < c0 {
                return Err(Error::Config(
                    "profile knots must be nondecreasing in both coordinates".into(),
                ));
            }
        }
        Ok(Self { knots })
    }

    /// The straight line `C(p) = p`: a reference policy that accumulates
    /// Full steps uniformly.
    pub fn identity() -> Self {
        Self {
            knots: alloc::vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Linear interpolation at `progress`, clamped to `[0, 1]`.
    pub fn eval(&self, progress: f64) -> f64 {
        let p = progress.clamp(0.0, 1.0);
        let i = self.knots.partition_point(|k| k.0 < p);
        if i == 0 {
            return self.knots[0].1;
        }
        if i == self.knots.len() {
            return self.knots[self.knots.len() - 1].1;
        }
        let (p0, c0) = self.knots[i - 1];
        let (p1, c1) = self.knots[i];
        if p1 == p0 {
            return c1;
        }
        c0 + (c1 - c0) * (p - p0) / (p1 - p0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerConfig {
    /// Soft ceiling on Full evaluations.
    pub n_cap: usize,
    pub profile: ReferenceProfile,
    /// Threshold at zero tracking error.
    pub base_threshold: f64,
    pub proportional_gain: f64,
    pub integral_gain: f64,
    pub threshold_min: f64,
    pub threshold_max: f64,
    pub integral_min: f64,
    pub integral_max: f64,
}

/// Default gains and clamps: sized so a tracking error of a few Fulls moves
/// the threshold by tenths.
pub const DEFAULT_BASE_THRESHOLD: f64 = 0.35;
pub const DEFAULT_PROPORTIONAL_GAIN: f64 = 0.05;
pub const DEFAULT_INTEGRAL_GAIN: f64 = 0.01;
pub const DEFAULT_THRESHOLD_MIN: f64 = 0.05;
pub const DEFAULT_THRESHOLD_MAX: f64 = 0.95;
pub const DEFAULT_INTEGRAL_MIN: f64 = -20.0;
pub const DEFAULT_INTEGRAL_MAX: f64 = 20.0;

impl ControllerConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_cap: usize,
        profile: ReferenceProfile,
        base_threshold: f64,
        proportional_gain: f64,
        integral_gain: f64,
        threshold_min: f64,
        threshold_max: f64,
        integral_min: f64,
        integral_max: f64,
    ) -> Result<Self> {
        if n_cap == 0 {
            return Err(Error::Config("cap must be at least 1".into()));
        }
        if !(base_threshold > 0.0 && base_threshold < 1.0) {
            return Err(Error::Config("base threshold must lie in (0, 1)".into()));
        }
        if !(proportional_gain.is_finite() && proportional_gain >= 0.0)
            || !(integral_gain.is_finite() && integral_gain >= 0.0)
        {
            return Err(Error::Config("gains must be finite and nonnegative".into()));
        }
        if !(0.0 <= threshold_min && threshold_min < threshold_max && threshold_max <= 1.0) {
            return Err(Error::Config(
                "threshold clamp must satisfy 0 <= min < max <= 1".into(),
            ));
        }
        if !(threshold_min <= base_threshold && base_threshold <= threshold_max) {
            return Err(Error::Config(
                "base threshold must lie inside the threshold clamp".into(),
            ));
        }
        if !(integral_min <= 0.0 && 0.0 <= integral_max) {
            return Err(Error::Config(
                "integral clamp must contain zero".into(),
            ));
        }
        Ok(Self {
            n_cap,
            profile,
            base_threshold,
            proportional_gain,
            integral_gain,
            threshold_min,
            threshold_max,
            integral_min,
            integral_max,
        })
    }

    /// Default gains and clamps around the given cap and profile.
    pub fn with_profile(n_cap: usize, profile: ReferenceProfile) -> Result<Self> {
        Self::new(
            n_cap,
            profile,
            DEFAULT_BASE_THRESHOLD,
            DEFAULT_PROPORTIONAL_GAIN,
            DEFAULT_INTEGRAL_GAIN,
            DEFAULT_THRESHOLD_MIN,
            DEFAULT_THRESHOLD_MAX,
            DEFAULT_INTEGRAL_MIN,
            DEFAULT_INTEGRAL_MAX,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerState {
    pub integral: f64,
    pub threshold: f64,
    pub last_error: f64,
}

impl ControllerState {
    pub fn initial(cfg: &ControllerConfig) -> Self {
        Self {
            integral: 0.0,
            threshold: cfg.base_threshold,
            last_error: 0.0,
        }
    }
}

/// Reference cumulative Full count at `progress`; real-valued, not rounded.
pub fn reference_count(cfg: &ControllerConfig, progress: f64) -> f64 {
    cfg.profile.eval(progress) * cfg.n_cap as f64
}

/// One PI update over the budget-tracking error.
pub fn update(
    state: &ControllerState,
    n_actual: usize,
    progress: f64,
    cfg: &ControllerConfig,
) -> ControllerState {
    let error = n_actual as f64 - reference_count(cfg, progress);
    let integral = (state.integral + error).clamp(cfg.integral_min, cfg.integral_max);
    let threshold = (cfg.base_threshold
        + cfg.proportional_gain * error
        + cfg.integral_gain * integral)
        .clamp(cfg.threshold_min, cfg.threshold_max);
    ControllerState {
        integral,
        threshold,
        last_error: error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_cfg(n_cap: usize) -> ControllerConfig {
        ControllerConfig::with_profile(n_cap, ReferenceProfile::identity()).unwrap()
    }

    #[test]
    fn profile_requires_pinned_endpoints_and_monotonicity() {
        assert!(ReferenceProfile::new(vec![]).is_err());
        assert!(ReferenceProfile::new(vec![(0.0, 0.0), (1.0, 0.9)]).is_err());
        assert!(ReferenceProfile::new(vec![(0.1, 0.0), (1.0, 1.0)]).is_err());
        assert!(ReferenceProfile::new(vec![(0.0, 0.0), (0.5, 0.8), (0.6, 0.4), (1.0, 1.0)])
            .is_err());
        assert!(ReferenceProfile::new(vec![(0.0, 0.0), (0.5, 0.7), (1.0, 1.0)]).is_ok());
    }

    #[test]
    fn profile_interpolates_linearly() {
        let profile = ReferenceProfile::new(vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)]).unwrap();
        assert_eq!(profile.eval(0.0), 0.0);
        assert_eq!(profile.eval(1.0), 1.0);
        assert!((profile.eval(0.25) - 0.4).abs() < 1e-15);
        assert!((profile.eval(0.75) - 0.9).abs() < 1e-15);
        // Out-of-range progress is clamped.
        assert_eq!(profile.eval(-3.0), 0.0);
        assert_eq!(profile.eval(7.0), 1.0);
    }

    #[test]
    fn reference_count_scales_the_profile() {
        let cfg = default_cfg(24);
        assert_eq!(reference_count(&cfg, 0.0), 0.0);
        assert_eq!(reference_count(&cfg, 1.0), 24.0);
        let cfg = default_cfg(20);
        assert_eq!(reference_count(&cfg, 0.5), 10.0);
    }

    #[test]
    fn zero_error_is_a_fixpoint_at_the_base_threshold() {
        let cfg = default_cfg(20);
        let state = ControllerState::initial(&cfg);
        // progress 0.5 on the identity profile references 10 Fulls.
        let next = update(&state, 10, 0.5, &cfg);
        assert_eq!(next.last_error, 0.0);
        assert_eq!(next.threshold, cfg.base_threshold);
    }

    #[test]
    fn update_matches_hand_arithmetic() {
        // Kp = 0.05, Ki = 0.01, tau0 = 0.35, I = 0, e = 4:
        // I' = 4, tau' = 0.35 + 0.2 + 0.04 = 0.59.
        let cfg = default_cfg(20);
        let state = ControllerState::initial(&cfg);
        let next = update(&state, 14, 0.5, &cfg);
        assert_eq!(next.last_error, 4.0);
        assert_eq!(next.integral, 4.0);
        assert!((next.threshold - 0.59).abs() < 1e-12);
    }

    #[test]
    fn positive_error_raises_the_threshold() {
        let cfg = default_cfg(20);
        let state = ControllerState::initial(&cfg);
        let ahead = update(&state, 16, 0.5, &cfg);
        let on_track = update(&state, 10, 0.5, &cfg);
        assert!(ahead.threshold >= on_track.threshold);
    }

    #[test]
    fn anti_windup_saturates_without_divergence() {
        let cfg = default_cfg(10);
        let mut state = ControllerState::initial(&cfg);
        for _ in 0..1000 {
            state = update(&state, 500, 0.5, &cfg);
        }
        assert_eq!(state.integral, cfg.integral_max);
        assert_eq!(state.threshold, cfg.threshold_max);
        assert!(state.last_error.is_finite());
    }

    #[test]
    fn pure_proportional_ignores_history() {
        let cfg = ControllerConfig::new(
            20,
            ReferenceProfile::identity(),
            0.35,
            0.05,
            0.0,
            0.05,
            0.95,
            -20.0,
            20.0,
        )
        .unwrap();
        let fresh = ControllerState::initial(&cfg);
        let mut aged = ControllerState::initial(&cfg);
        for n in [3usize, 19, 0, 40] {
            aged = update(&aged, n, 0.3, &cfg);
        }
        let a = update(&fresh, 12, 0.5, &cfg);
        let b = update(&aged, 12, 0.5, &cfg);
        assert_eq!(a.threshold, b.threshold);
    }

    #[test]
    fn config_validation() {
        let profile = ReferenceProfile::identity;
        assert!(ControllerConfig::new(0, profile(), 0.35, 0.05, 0.01, 0.05, 0.95, -20.0, 20.0)
            .is_err());
        assert!(ControllerConfig::new(5, profile(), 0.0, 0.05, 0.01, 0.05, 0.95, -20.0, 20.0)
            .is_err());
        assert!(ControllerConfig::new(5, profile(), 0.5, 0.05, 0.01, 0.6, 0.95, -20.0, 20.0)
            .is_err());
        assert!(ControllerConfig::new(5, profile(), 0.5, 0.05, 0.01, 0.9, 0.5, -20.0, 20.0)
            .is_err());
        assert!(ControllerConfig::new(5, profile(), 0.5, 0.05, 0.01, 0.05, 0.95, 5.0, 20.0)
            .is_err());
    }

    proptest! {
        /// Clamp safety across random updates.
        #[test]
        fn state_respects_clamps(
            n_actual in 0usize..200,
            progress in 0.0f64..1.0,
            start_integral in -40.0f64..40.0,
            n_cap in 1usize..64,
        ) {
            let cfg = default_cfg(n_cap);
            let state = ControllerState {
                integral: start_integral.clamp(cfg.integral_min, cfg.integral_max),
                threshold: cfg.base_threshold,
                last_error: 0.0,
            };
            let next = update(&state, n_actual, progress, &cfg);
            prop_assert!(next.integral >= cfg.integral_min && next.integral <= cfg.integral_max);
            prop_assert!(next.threshold >= cfg.threshold_min && next.threshold <= cfg.threshold_max);
        }

        /// Holding state fixed, a larger error never lowers the threshold.
        #[test]
        fn threshold_is_monotone_in_the_error(
            n1 in 0usize..100,
            n2 in 0usize..100,
            progress in 0.0f64..1.0,
            integral in -20.0f64..20.0,
        ) {
            let cfg = default_cfg(24);
            let state = ControllerState { integral, threshold: 0.35, last_error: 0.0 };
            let (hi, lo) = if n1 >= n2 { (n1, n2) } else { (n2, n1) };
            let t_hi = update(&state, hi, progress, &cfg).threshold;
            let t_lo = update(&state, lo, progress, &cfg).threshold;
            prop_assert!(t_hi >= t_lo);
        }
    }
}
