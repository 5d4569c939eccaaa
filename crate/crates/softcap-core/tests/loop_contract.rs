//! Whole-loop contracts: guard safety under fuzzed configurations and the
//! budget feedback direction.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use softcap_core::cache::{CacheConfig, CoefficientScheme};
use softcap_core::controller::{self, ControllerConfig, ControllerState, ReferenceProfile};
use softcap_core::cost::CostModel;
use softcap_core::observer::ObserverConfig;
use softcap_core::policy::{self, Action, PolicyConfig, ThresholdRule};
use softcap_core::trajectory::{self, BurstWindow, TrajectoryKind, TrajectorySpec};

fn fuzzed_config(rng: &mut ChaCha8Rng) -> (TrajectorySpec, PolicyConfig) {
    let total_steps = rng.random_range(15..=60);
    let warmup_steps = rng.random_range(0..=total_steps.min(13) - 1);
    let max_skip = rng.random_range(1..=12);
    let order = rng.random_range(1..=4);
    let scheme = if rng.random_bool(0.5) {
        CoefficientScheme::NewtonForward
    } else {
        CoefficientScheme::FactorialTaylor
    };

    let kind = match rng.random_range(0..3) {
        0 => TrajectoryKind::SmoothNoise,
        1 => TrajectoryKind::RegimeSwitching,
        _ => TrajectoryKind::Polynomial,
    };
    let bursts = if kind == TrajectoryKind::RegimeSwitching && total_steps > 20 {
        vec![BurstWindow {
            start: 10,
            end: 16,
            amplitude: rng.random_range(1.0..80.0),
        }]
    } else {
        vec![]
    };
    let spec = TrajectorySpec {
        kind,
        steps: total_steps,
        tokens: rng.random_range(1..=6),
        channels: rng.random_range(1..=6),
        degree: rng.random_range(0..=3),
        noise_scale: rng.random_range(0.0..0.3),
        bursts,
        seed: rng.random(),
        replay_path: None,
    };

    let threshold = if rng.random_bool(0.5) {
        ThresholdRule::Fixed {
            threshold: rng.random_range(0.01..0.99),
        }
    } else {
        ThresholdRule::Pi(
            ControllerConfig::with_profile(
                rng.random_range(1..=50),
                ReferenceProfile::identity(),
            )
            .unwrap(),
        )
    };

    let cfg = PolicyConfig {
        warmup_steps,
        total_steps,
        cache: CacheConfig::new(order, max_skip, scheme).unwrap(),
        observer: ObserverConfig {
            increment_enabled: rng.random_bool(0.5),
            ..ObserverConfig::default()
        },
        threshold,
        reset_increment_at_refresh: rng.random_bool(0.25),
    };
    (spec, cfg)
}

#[test]
fn fuzzed_runs_never_cache_beyond_the_max_skip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
    for case in 0..100 {
        let (spec, cfg) = fuzzed_config(&mut rng);
        let traj = trajectory::generate(&spec).unwrap();
        let trace = policy::run(&traj, &cfg, &CostModel::unit())
            .unwrap_or_else(|e| panic!("case {case} failed: {e}"));
        for rec in &trace.steps {
            if rec.action == Action::Cache {
                assert!(
                    rec.cache_distance <= cfg.cache.max_skip,
                    "case {case}: cache step {} at distance {} > {}",
                    rec.step,
                    rec.cache_distance,
                    cfg.cache.max_skip
                );
            }
        }
        let s = &trace.summary;
        assert_eq!(s.actual_full, s.warmup_full + s.guard_full + s.crossing_full);
    }
}

#[test]
fn extra_realized_fulls_never_lower_subsequent_thresholds() {
    // Feed two controllers the same realized-Full series, one bumped by +5
    // from the midpoint on; with everything else equal the bumped side's
    // threshold must dominate at every step.
    let spec = TrajectorySpec {
        kind: TrajectoryKind::SmoothNoise,
        steps: 50,
        tokens: 4,
        channels: 4,
        degree: 0,
        noise_scale: 0.05,
        bursts: vec![],
        seed: 17,
        replay_path: None,
    };
    let traj = trajectory::generate(&spec).unwrap();
    let ctrl = ControllerConfig::with_profile(16, ReferenceProfile::identity()).unwrap();
    let cfg = PolicyConfig {
        warmup_steps: 10,
        total_steps: 50,
        cache: CacheConfig::default(),
        observer: ObserverConfig::default(),
        threshold: ThresholdRule::Pi(ctrl.clone()),
        reset_increment_at_refresh: false,
    };
    let trace = policy::run(&traj, &cfg, &CostModel::unit()).unwrap();

    // Realized counts as seen *before* each decision.
    let n_before: Vec<usize> = std::iter::once(0)
        .chain(trace.steps.iter().map(|r| r.n_actual_after))
        .take(trace.steps.len())
        .collect();

    let inject_at = 25;
    let mut plain = ControllerState::initial(&ctrl);
    let mut bumped = ControllerState::initial(&ctrl);
    for (t, &n) in n_before.iter().enumerate() {
        let p = t as f64 / 49.0;
        plain = controller::update(&plain, n, p, &ctrl);
        let n_inj = if t >= inject_at { n + 5 } else { n };
        bumped = controller::update(&bumped, n_inj, p, &ctrl);
        assert!(
            bumped.threshold >= plain.threshold,
            "step {t}: bumped {} < plain {}",
            bumped.threshold,
            plain.threshold
        );
    }
}
