//! Risk-gated Full/Cache decision loop.
//!
//! Each step runs the same sequence: the observer scores the current drift
//! against the anchor, the controller updates the threshold from the Full
//! count realized so far, and then one of three paths fires:
//!
//! 1. warmup: the first `warmup_steps` steps execute Full unconditionally
//!    to populate the cache history;
//! 2. guard: once the cache distance reaches the maximum skip, a Full is
//!    forced to protect the extrapolation;
//! 3. the risk gate: Full iff the risk score is at least the threshold
//!    (ties execute Full), Cache otherwise.
//!
//! Warmup and guard Fulls bypass the gate but still count toward the
//! realized Full counter, since they consume full model computation. The
//! cap itself never forces a Full: a stable run may finish well below it.
//!
//! Every step is recorded in a [`StepRecord`]; the observer runs on bypassed
//! steps too, so the trace carries a complete risk series and the
//! positive-increment state threads across the whole run (an optional flag
//! resets it at each anchor refresh).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::cache::{AnchorState, CacheConfig};
use crate::controller::{self, ControllerConfig, ControllerState, ReferenceProfile};
use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::observer::{self, ObserverConfig, RiskReport};
use crate::tensor::FeatureTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Full,
    Cache,
}

/// Why a step took its action. `Full` actions carry `Warmup`, `Guard`, or
/// `Crossing`; `Cache` actions always carry `Cache`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reason {
    Warmup,
    Guard,
    Crossing,
    Cache,
}

/// How the per-step threshold is produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdRule {
    /// A constant threshold; the controller is bypassed.
    Fixed { threshold: f64 },
    /// The soft-budget PI controller.
    Pi(ControllerConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyConfig {
    pub warmup_steps: usize,
    pub total_steps: usize,
    pub cache: CacheConfig,
    pub observer: ObserverConfig,
    pub threshold: ThresholdRule,
    /// Clear the observer's previous base score at each anchor refresh
    /// instead of threading it across the whole run.
    pub reset_increment_at_refresh: bool,
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 {
            return Err(Error::Config("run must have at least one step".into()));
        }
        if self.warmup_steps >= self.total_steps {
            return Err(Error::Config(format!(
                "warmup ({}) must be shorter than the run ({})",
                self.warmup_steps, self.total_steps
            )));
        }
        if let ThresholdRule::Fixed { threshold } = self.threshold {
            if !(threshold > 0.0 && threshold < 1.0) {
                return Err(Error::Config("fixed threshold must lie in (0, 1)".into()));
            }
        }
        Ok(())
    }
}

/// Everything recorded about one step of the loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub action: Action,
    pub reason: Reason,
    pub report: RiskReport,
    pub threshold: f64,
    /// Budget-tracking error at this step (zero under a fixed threshold).
    pub error: f64,
    pub integral: f64,
    /// Realized Full count after this step's action.
    pub n_actual_after: usize,
    /// Cache distance at decision time (zero before any anchor exists).
    pub cache_distance: usize,
    pub cost: f64,
    /// L2 distance between the cached approximation and the true feature;
    /// zero on Full steps.
    pub approx_l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Summary {
    pub actual_full: usize,
    pub crossing_full: usize,
    pub warmup_full: usize,
    pub guard_full: usize,
    pub total_cost: f64,
    /// Mean approximation error over Cache steps (zero when none exist).
    pub mean_cache_l2: f64,
}

/// A complete recorded run: the configuration snapshot, one record per step,
/// and the folded summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub policy: PolicyConfig,
    pub cost_model: CostModel,
    pub steps: Vec<StepRecord>,
    pub summary: Summary,
}

/// The risk gate: Full iff the score reaches the threshold (ties go to
/// Full).
pub fn decide(score: f64, threshold: f64) -> Action {
    if score >= threshold {
        Action::Full
    } else {
        Action::Cache
    }
}

fn progress(step: usize, total_steps: usize) -> f64 {
    if total_steps > 1 {
        step as f64 / (total_steps - 1) as f64
    } else {
        0.0
    }
}

/// Runs the decision loop over a trajectory. Deterministic in
/// `(trajectory, cfg, cost)`.
pub fn run(
    trajectory: &[FeatureTensor],
    cfg: &PolicyConfig,
    cost: &CostModel,
) -> Result<RunTrace> {
    cfg.validate()?;
    if trajectory.len() != cfg.total_steps {
        return Err(Error::Config(format!(
            "trajectory length {} does not match the configured {} steps",
            trajectory.len(),
            cfg.total_steps
        )));
    }
    let shape = trajectory[0].shape();
    if trajectory.iter().any(|t| t.shape() != shape) {
        return Err(Error::Config("trajectory tensors must share one shape".into()));
    }

    let mut anchor: Option<AnchorState> = None;
    let mut pi_state = match &cfg.threshold {
        ThresholdRule::Pi(c) => Some(ControllerState::initial(c)),
        ThresholdRule::Fixed { .. } => None,
    };
    let mut n_actual: usize = 0;
    let mut prev_base: Option<f64> = None;
    let mut steps = Vec::with_capacity(cfg.total_steps);

    for (t, current) in trajectory.iter().enumerate() {
        let distance = match &anchor {
            Some(a) => Some(a.cache_distance(t)?),
            None => None,
        };

        let report = match &anchor {
            Some(a) => observer::assess(
                current,
                a,
                t,
                cfg.cache.max_skip,
                prev_base,
                &cfg.observer,
            )?,
            None => observer::saturated_report(prev_base, &cfg.observer),
        };

        let (threshold, error, integral) = match &cfg.threshold {
            ThresholdRule::Fixed { threshold } => (*threshold, 0.0, 0.0),
            ThresholdRule::Pi(c) => {
                let state = pi_state.as_mut().expect("pi state exists in pi mode");
                *state = controller::update(state, n_actual, progress(t, cfg.total_steps), c);
                (state.threshold, state.last_error, state.integral)
            }
        };

        let (action, reason) = if t < cfg.warmup_steps {
            (Action::Full, Reason::Warmup)
        } else if distance.is_some_and(|d| d >= cfg.cache.max_skip) {
            (Action::Full, Reason::Guard)
        } else {
            match decide(report.score, threshold) {
                Action::Full => (Action::Full, Reason::Crossing),
                Action::Cache => (Action::Cache, Reason::Cache),
            }
        };

        let approx_l2 = match action {
            Action::Full => {
                match anchor.as_mut() {
                    Some(a) => a.refresh(t, current.clone())?,
                    None => anchor = Some(AnchorState::new(t, current.clone(), cfg.cache.order)?),
                }
                n_actual += 1;
                0.0
            }
            Action::Cache => {
                let a = anchor
                    .as_ref()
                    .ok_or_else(|| Error::State("cache step without an anchor".into()))?;
                let approx = a.approximate(t, &cfg.cache)?;
                approx.l2_distance(current)?
            }
        };

        let step_cost = match action {
            Action::Full => cost.full_step_cost(),
            Action::Cache => cost.cache_step_cost(),
        };

        let base = report.base;
        steps.push(StepRecord {
            step: t,
            action,
            reason,
            report,
            threshold,
            error,
            integral,
            n_actual_after: n_actual,
            cache_distance: distance.unwrap_or(0),
            cost: step_cost,
            approx_l2,
        });

        prev_base = if action == Action::Full && cfg.reset_increment_at_refresh {
            None
        } else {
            Some(base)
        };
    }

    let summary = summarize(&steps);
    Ok(RunTrace {
        policy: cfg.clone(),
        cost_model: cost.clone(),
        steps,
        summary,
    })
}

/// Recounts a trace's summary from its step records.
pub fn count_summary(trace: &RunTrace) -> Summary {
    summarize(&trace.steps)
}

fn summarize(steps: &[StepRecord]) -> Summary {
    let mut summary = Summary::default();
    let mut cache_l2_sum = 0.0;
    let mut cache_count = 0usize;
    for rec in steps {
        if rec.action == Action::Full {
            summary.actual_full += 1;
        }
        match rec.reason {
            Reason::Warmup => summary.warmup_full += 1,
            Reason::Guard => summary.guard_full += 1,
            Reason::Crossing => summary.crossing_full += 1,
            Reason::Cache => {
                cache_l2_sum += rec.approx_l2;
                cache_count += 1;
            }
        }
        summary.total_cost += rec.cost;
    }
    summary.mean_cache_l2 = if cache_count > 0 {
        cache_l2_sum / cache_count as f64
    } else {
        0.0
    };
    summary
}

/// Tabulates the reference profile: runs the loop with a constant threshold
/// over an ensemble of same-length trajectories and records, for every step
/// boundary, the ensemble-mean cumulative Full count before that step as a
/// fraction of the ensemble-mean total. Knot `t` sits at progress `t / T`,
/// so the endpoints land exactly on `(0, 0)` and `(1, 1)`. The profile is
/// built once and then held fixed.
pub fn build_profile(
    reference_threshold: f64,
    ensemble: &[Vec<FeatureTensor>],
    warmup_steps: usize,
    cache: &CacheConfig,
    observer: &ObserverConfig,
) -> Result<ReferenceProfile> {
    if !(reference_threshold > 0.0 && reference_threshold < 1.0) {
        return Err(Error::Config("reference threshold must lie in (0, 1)".into()));
    }
    if ensemble.is_empty() {
        return Err(Error::Config("profile ensemble must be nonempty".into()));
    }
    let total_steps = ensemble[0].len();
    if ensemble.iter().any(|m| m.len() != total_steps) {
        return Err(Error::Config(
            "profile ensemble members must share one length".into(),
        ));
    }

    let cfg = PolicyConfig {
        warmup_steps,
        total_steps,
        cache: cache.clone(),
        observer: observer.clone(),
        threshold: ThresholdRule::Fixed {
            threshold: reference_threshold,
        },
        reset_increment_at_refresh: false,
    };

    // cumulative[t] = summed Full count before step t, over the ensemble.
    let mut cumulative = vec![0.0f64; total_steps + 1];
    for member in ensemble {
        let trace = run(member, &cfg, &CostModel::unit())?;
        let mut count = 0usize;
        for (t, rec) in trace.steps.iter().enumerate() {
            cumulative[t] += count as f64;
            if rec.action == Action::Full {
                count += 1;
            }
        }
        cumulative[total_steps] += count as f64;
    }

    let denom = cumulative[total_steps];
    if denom <= 0.0 {
        return Err(Error::DegenerateProfile);
    }
    let knots = (0..=total_steps)
        .map(|t| (t as f64 / total_steps as f64, cumulative[t] / denom))
        .collect();
    ReferenceProfile::new(knots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{self, TrajectoryKind, TrajectorySpec};

    fn constant_trajectory(value: f64, steps: usize) -> Vec<FeatureTensor> {
        (0..steps)
            .map(|_| FeatureTensor::new(vec![value; 4], 2, 2).unwrap())
            .collect()
    }

    fn fixed_cfg(warmup: usize, total: usize, threshold: f64) -> PolicyConfig {
        PolicyConfig {
            warmup_steps: warmup,
            total_steps: total,
            cache: CacheConfig::default(),
            observer: ObserverConfig::default(),
            threshold: ThresholdRule::Fixed { threshold },
            reset_increment_at_refresh: false,
        }
    }

    fn pi_cfg(warmup: usize, total: usize, n_cap: usize) -> PolicyConfig {
        PolicyConfig {
            warmup_steps: warmup,
            total_steps: total,
            cache: CacheConfig::default(),
            observer: ObserverConfig::default(),
            threshold: ThresholdRule::Pi(
                ControllerConfig::with_profile(n_cap, ReferenceProfile::identity()).unwrap(),
            ),
            reset_increment_at_refresh: false,
        }
    }

    #[test]
    fn ties_execute_full() {
        assert_eq!(decide(0.5, 0.5), Action::Full);
        assert_eq!(decide(0.49, 0.5), Action::Cache);
        assert_eq!(decide(1.0, 0.95), Action::Full);
    }

    #[test]
    fn warmup_dominates_when_it_covers_the_run() {
        // All steps but the last are warmup; the last step still exceeds any
        // threshold it can see only via the gate, so pick a constant
        // trajectory and a high threshold to pin it to Cache.
        let cfg = fixed_cfg(9, 10, 0.9);
        let trace = run(&constant_trajectory(1.0, 10), &cfg, &CostModel::unit()).unwrap();
        assert_eq!(trace.summary.warmup_full, 9);
        assert_eq!(trace.summary.crossing_full, 0);
        assert_eq!(trace.summary.actual_full, 9);
    }

    #[test]
    fn constant_trajectory_triggers_only_guard_fulls_after_warmup() {
        let cfg = fixed_cfg(2, 50, 0.9);
        let trace = run(&constant_trajectory(1.0, 50), &cfg, &CostModel::unit()).unwrap();
        // Warmup at steps 0-1; the anchor then sits at step 1, so guards
        // fire when the distance reaches 10: steps 11, 21, 31, 41.
        let guard_steps: Vec<usize> = trace
            .steps
            .iter()
            .filter(|r| r.reason == Reason::Guard)
            .map(|r| r.step)
            .collect();
        assert_eq!(guard_steps, vec![11, 21, 31, 41]);
        assert_eq!(trace.summary.crossing_full, 0);
        assert_eq!(trace.summary.actual_full, 2 + 4);
        // Between guards every cue except anchor deviation stays near zero.
        for rec in &trace.steps {
            if rec.reason == Reason::Cache {
                assert!(rec.report.raw.magnitude < 1e-9);
                assert!(rec.report.raw.volatility < 1e-9);
                assert!(rec.report.raw.direction < 1e-5);
            }
        }
    }

    #[test]
    fn burst_produces_a_crossing_full_inside_the_window() {
        let spec = TrajectorySpec {
            kind: TrajectoryKind::RegimeSwitching,
            steps: 50,
            tokens: 8,
            channels: 16,
            degree: 0,
            noise_scale: 0.02,
            bursts: vec![crate::trajectory::BurstWindow {
                start: 25,
                end: 30,
                amplitude: 100.0,
            }],
            seed: 7,
            replay_path: None,
        };
        let traj = trajectory::generate(&spec).unwrap();
        let cfg = fixed_cfg(10, 50, 0.5);
        let trace = run(&traj, &cfg, &CostModel::unit()).unwrap();
        let crossing_in_burst = trace
            .steps
            .iter()
            .any(|r| r.reason == Reason::Crossing && (25..30).contains(&r.step));
        assert!(crossing_in_burst, "no crossing inside the burst window");
    }

    #[test]
    fn counters_match_an_independent_fold() {
        let spec = TrajectorySpec {
            kind: TrajectoryKind::SmoothNoise,
            steps: 40,
            tokens: 4,
            channels: 4,
            degree: 0,
            noise_scale: 0.05,
            bursts: vec![],
            seed: 11,
            replay_path: None,
        };
        let traj = trajectory::generate(&spec).unwrap();
        let trace = run(&traj, &pi_cfg(5, 40, 12), &CostModel::calibrated()).unwrap();

        // Independent fold over the records.
        let mut actual = 0usize;
        let (mut warmup, mut guard, mut crossing) = (0usize, 0usize, 0usize);
        let mut cost = 0.0;
        for r in &trace.steps {
            if r.action == Action::Full {
                actual += 1;
            }
            match r.reason {
                Reason::Warmup => warmup += 1,
                Reason::Guard => guard += 1,
                Reason::Crossing => crossing += 1,
                Reason::Cache => {}
            }
            cost += r.cost;
        }
        assert_eq!(trace.summary.actual_full, actual);
        assert_eq!(trace.summary.warmup_full, warmup);
        assert_eq!(trace.summary.guard_full, guard);
        assert_eq!(trace.summary.crossing_full, crossing);
        assert_eq!(actual, warmup + guard + crossing);
        assert!((trace.summary.total_cost - cost).abs() < 1e-9);
        assert_eq!(count_summary(&trace), trace.summary);
        // The realized counter agrees with the last record.
        assert_eq!(trace.steps.last().unwrap().n_actual_after, actual);
    }

    #[test]
    fn no_cache_step_exceeds_the_max_skip() {
        let spec = TrajectorySpec {
            kind: TrajectoryKind::SmoothNoise,
            steps: 60,
            tokens: 4,
            channels: 4,
            degree: 0,
            noise_scale: 0.01,
            bursts: vec![],
            seed: 3,
            replay_path: None,
        };
        let traj = trajectory::generate(&spec).unwrap();
        let mut cfg = pi_cfg(4, 60, 8);
        cfg.cache.max_skip = 6;
        let trace = run(&traj, &cfg, &CostModel::unit()).unwrap();
        for r in &trace.steps {
            if r.action == Action::Cache {
                assert!(r.cache_distance <= cfg.cache.max_skip);
            }
        }
    }

    #[test]
    fn the_cap_is_soft_in_both_directions() {
        // A stable run finishes far below a generous cap.
        let trace = run(
            &constant_trajectory(1.0, 50),
            &pi_cfg(10, 50, 24),
            &CostModel::unit(),
        )
        .unwrap();
        assert!(trace.summary.actual_full < 24);

        // A bursty run exceeds a tiny cap: risk crossings still fire.
        let spec = TrajectorySpec {
            kind: TrajectoryKind::RegimeSwitching,
            steps: 50,
            tokens: 8,
            channels: 8,
            degree: 0,
            noise_scale: 0.05,
            bursts: vec![crate::trajectory::BurstWindow {
                start: 12,
                end: 45,
                amplitude: 60.0,
            }],
            seed: 5,
            replay_path: None,
        };
        let traj = trajectory::generate(&spec).unwrap();
        let trace = run(&traj, &pi_cfg(10, 50, 2), &CostModel::unit()).unwrap();
        assert!(trace.summary.actual_full > 2);
    }

    #[test]
    fn run_is_deterministic() {
        let spec = TrajectorySpec {
            kind: TrajectoryKind::SmoothNoise,
            steps: 30,
            tokens: 4,
            channels: 4,
            degree: 0,
            noise_scale: 0.05,
            bursts: vec![],
            seed: 9,
            replay_path: None,
        };
        let traj = trajectory::generate(&spec).unwrap();
        let cfg = pi_cfg(5, 30, 10);
        let a = run(&traj, &cfg, &CostModel::calibrated()).unwrap();
        let b = run(&traj, &cfg, &CostModel::calibrated()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disabled_increment_keeps_score_equal_to_base() {
        let spec = TrajectorySpec {
            kind: TrajectoryKind::SmoothNoise,
            steps: 30,
            tokens: 4,
            channels: 4,
            degree: 0,
            noise_scale: 0.1,
            bursts: vec![],
            seed: 21,
            replay_path: None,
        };
        let traj = trajectory::generate(&spec).unwrap();
        let cfg = pi_cfg(5, 30, 10);
        assert!(!cfg.observer.increment_enabled);
        let trace = run(&traj, &cfg, &CostModel::unit()).unwrap();
        for r in &trace.steps {
            assert_eq!(r.report.score, r.report.base);
        }
    }

    #[test]
    fn increment_state_threads_across_refreshes_unless_reset() {
        let spec = TrajectorySpec {
            kind: TrajectoryKind::RegimeSwitching,
            steps: 30,
            tokens: 4,
            channels: 4,
            degree: 0,
            noise_scale: 0.1,
            bursts: vec![crate::trajectory::BurstWindow {
                start: 10,
                end: 20,
                amplitude: 15.0,
            }],
            seed: 2,
            replay_path: None,
        };
        let traj = trajectory::generate(&spec).unwrap();
        let mut cfg = fixed_cfg(3, 30, 0.9);
        cfg.observer.increment_enabled = true;

        let threaded = run(&traj, &cfg, &CostModel::unit()).unwrap();
        // The step right after a Full still sees a previous base score.
        let after_full: Vec<usize> = threaded
            .steps
            .iter()
            .filter(|r| r.action == Action::Full && r.step + 1 < 30)
            .map(|r| r.step + 1)
            .collect();
        assert!(!after_full.is_empty());

        cfg.reset_increment_at_refresh = true;
        let reset = run(&traj, &cfg, &CostModel::unit()).unwrap();
        for &t in &after_full {
            // With the reset flag the increment right after a refresh is
            // forced to zero.
            assert_eq!(reset.steps[t].report.increment, 0.0);
        }
    }

    #[test]
    fn zero_warmup_first_step_is_a_crossing_full() {
        let cfg = fixed_cfg(0, 10, 0.9);
        let trace = run(&constant_trajectory(2.0, 10), &cfg, &CostModel::unit()).unwrap();
        let first = &trace.steps[0];
        assert_eq!(first.action, Action::Full);
        assert_eq!(first.reason, Reason::Crossing);
        assert_eq!(first.report.score, 1.0);
    }

    #[test]
    fn single_step_run_forces_one_full() {
        let cfg = fixed_cfg(0, 1, 0.9);
        let trace = run(&constant_trajectory(1.0, 1), &cfg, &CostModel::unit()).unwrap();
        assert_eq!(trace.summary.actual_full, 1);
        assert_eq!(trace.steps[0].reason, Reason::Crossing);
    }

    #[test]
    fn validates_warmup_and_lengths() {
        let cfg = fixed_cfg(10, 10, 0.5);
        assert!(matches!(
            run(&constant_trajectory(1.0, 10), &cfg, &CostModel::unit()),
            Err(Error::Config(_))
        ));
        let cfg = fixed_cfg(2, 10, 0.5);
        assert!(matches!(
            run(&constant_trajectory(1.0, 9), &cfg, &CostModel::unit()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn profile_of_an_all_full_reference_is_the_identity() {
        // A tiny threshold converts every gated step, so the reference
        // policy executes Full everywhere and accumulates uniformly.
        let ensemble: Vec<Vec<FeatureTensor>> =
            (0..3).map(|_| constant_trajectory(1.0, 20)).collect();
        let profile = build_profile(
            1e-9,
            &ensemble,
            2,
            &CacheConfig::default(),
            &ObserverConfig::default(),
        )
        .unwrap();
        for (i, &(p, c)) in profile.knots().iter().enumerate() {
            assert_eq!(p, i as f64 / 20.0);
            assert_eq!(c, i as f64 / 20.0);
        }
    }

    #[test]
    fn profile_front_loaded_reference_saturates_early() {
        // Warmup covers half the run; a high threshold plus a huge max skip
        // keeps the rest cached, so all Fulls sit in the first half.
        let cache = CacheConfig {
            max_skip: 100,
            ..CacheConfig::default()
        };
        let ensemble = vec![constant_trajectory(1.0, 20)];
        let profile =
            build_profile(0.9, &ensemble, 10, &cache, &ObserverConfig::default()).unwrap();
        assert_eq!(profile.eval(0.5), 1.0);
    }

    #[test]
    fn profile_build_is_deterministic() {
        let spec = TrajectorySpec {
            kind: TrajectoryKind::SmoothNoise,
            steps: 25,
            tokens: 4,
            channels: 4,
            degree: 0,
            noise_scale: 0.05,
            bursts: vec![],
            seed: 31,
            replay_path: None,
        };
        let ensemble: Vec<Vec<FeatureTensor>> = (0..5)
            .map(|i| {
                trajectory::generate(&TrajectorySpec {
                    seed: spec.seed + i,
                    ..spec.clone()
                })
                .unwrap()
            })
            .collect();
        let a = build_profile(
            0.35,
            &ensemble,
            5,
            &CacheConfig::default(),
            &ObserverConfig::default(),
        )
        .unwrap();
        let b = build_profile(
            0.35,
            &ensemble,
            5,
            &CacheConfig::default(),
            &ObserverConfig::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
