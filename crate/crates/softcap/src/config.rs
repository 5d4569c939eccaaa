//! The JSON run-config document and its materialization into core types.
//!
//! One document with sections `trajectory`, `cache`, `observer`,
//! `controller`, `policy`, and `cost`. Every field has a default except the
//! trajectory kind and (for synthetic kinds) the step count, so a minimal
//! config is just a trajectory section. Unknown fields are rejected.
//!
//! Relative paths (`replay_path`, `profile_path`) resolve against the
//! directory containing the config file. The environment variable
//! `SOFTCAP_SEED` (or `--seed`) overrides the trajectory seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use softcap_core::cache::{CacheConfig, CoefficientScheme};
use softcap_core::controller::{self, ControllerConfig, ReferenceProfile};
use softcap_core::cost::CostModel;
use softcap_core::observer::{Cues, ObserverConfig};
use softcap_core::policy::{PolicyConfig, ThresholdRule};
use softcap_core::tensor::FeatureTensor;
use softcap_core::trajectory::{self, BurstWindow, TrajectoryKind, TrajectorySpec};

use crate::error::{from_core, CliError};
use crate::profile_file;
use crate::tracefile;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub cache: CacheSection,
    #[serde(default)]
    pub observer: ObserverSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub cost: CostSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindTag {
    Polynomial,
    SmoothNoise,
    RegimeSwitching,
    Replay,
}

impl From<KindTag> for TrajectoryKind {
    fn from(tag: KindTag) -> Self {
        match tag {
            KindTag::Polynomial => TrajectoryKind::Polynomial,
            KindTag::SmoothNoise => TrajectoryKind::SmoothNoise,
            KindTag::RegimeSwitching => TrajectoryKind::RegimeSwitching,
            KindTag::Replay => TrajectoryKind::Replay,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub kind: KindTag,
    /// Required for synthetic kinds; inferred from the file for `replay`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default = "default_tokens")]
    pub tokens: usize,
    #[serde(default = "default_channels")]
    pub channels: usize,
    #[serde(default)]
    pub degree: usize,
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    /// `[start, end, amplitude]` windows for the regime-switching kind.
    #[serde(default)]
    pub bursts: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_path: Option<String>,
}

fn default_tokens() -> usize {
    16
}
fn default_channels() -> usize {
    8
}
fn default_noise_scale() -> f64 {
    0.008
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheSection {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_max_skip")]
    pub max_skip: usize,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeTag {
    NewtonForward,
    FactorialTaylor,
}

fn default_order() -> usize {
    2
}
fn default_max_skip() -> usize {
    10
}
fn default_scheme() -> SchemeTag {
    SchemeTag::NewtonForward
}

impl Default for CacheSection {
    fn default() -> Self {
        Self {
            order: default_order(),
            max_skip: default_max_skip(),
            scheme: default_scheme(),
        }
    }
}

/// Cue order in the arrays: magnitude, direction, anchor deviation,
/// temporal volatility.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    #[serde(default = "default_constants")]
    pub constants: [f64; 4],
    #[serde(default = "default_weights")]
    pub weights: [f64; 4],
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub increment_enabled: bool,
}

fn default_constants() -> [f64; 4] {
    softcap_core::observer::DEFAULT_NORM_CONSTANTS.as_array()
}
fn default_weights() -> [f64; 4] {
    softcap_core::observer::DEFAULT_WEIGHTS.as_array()
}
fn default_epsilon() -> f64 {
    softcap_core::observer::DEFAULT_EPSILON
}
fn default_gamma() -> f64 {
    softcap_core::observer::DEFAULT_GAMMA
}

impl Default for ObserverSection {
    fn default() -> Self {
        Self {
            constants: default_constants(),
            weights: default_weights(),
            epsilon: default_epsilon(),
            gamma: default_gamma(),
            increment_enabled: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerMode {
    Pi,
    Fixed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default = "default_mode")]
    pub mode: ControllerMode,
    /// Fixed mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "default_n_cap")]
    pub n_cap: usize,
    #[serde(default = "default_tau0")]
    pub tau0: f64,
    #[serde(default = "default_kp")]
    pub kp: f64,
    #[serde(default = "default_ki")]
    pub ki: f64,
    #[serde(default = "default_tau_min")]
    pub tau_min: f64,
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "default_i_min")]
    pub i_min: f64,
    #[serde(default = "default_i_max")]
    pub i_max: f64,
    /// Reference-profile file; the identity profile when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_path: Option<String>,
}

fn default_mode() -> ControllerMode {
    ControllerMode::Pi
}
fn default_n_cap() -> usize {
    24
}
fn default_tau0() -> f64 {
    controller::DEFAULT_BASE_THRESHOLD
}
fn default_kp() -> f64 {
    controller::DEFAULT_PROPORTIONAL_GAIN
}
fn default_ki() -> f64 {
    controller::DEFAULT_INTEGRAL_GAIN
}
fn default_tau_min() -> f64 {
    controller::DEFAULT_THRESHOLD_MIN
}
fn default_tau_max() -> f64 {
    controller::DEFAULT_THRESHOLD_MAX
}
fn default_i_min() -> f64 {
    controller::DEFAULT_INTEGRAL_MIN
}
fn default_i_max() -> f64 {
    controller::DEFAULT_INTEGRAL_MAX
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            tau: None,
            n_cap: default_n_cap(),
            tau0: default_tau0(),
            kp: default_kp(),
            ki: default_ki(),
            tau_min: default_tau_min(),
            tau_max: default_tau_max(),
            i_min: default_i_min(),
            i_max: default_i_max(),
            profile_path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default)]
    pub reset_increment_at_refresh: bool,
}

fn default_warmup() -> usize {
    10
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            warmup: default_warmup(),
            reset_increment_at_refresh: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSection {
    Preset {
        preset: String,
    },
    Explicit {
        full: f64,
        cache: f64,
        #[serde(default)]
        observer: f64,
        #[serde(default)]
        controller: f64,
    },
}

impl Default for CostSection {
    fn default() -> Self {
        CostSection::Preset {
            preset: "calibrated".into(),
        }
    }
}

/// A run config resolved into core types, plus the effective document with
/// overrides applied (written back out for reproducibility).
#[derive(Debug)]
pub struct Materialized {
    pub trajectory: Vec<FeatureTensor>,
    pub policy: PolicyConfig,
    pub cost: CostModel,
    pub effective: RunConfig,
}

pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
}

fn resolve(base_dir: &Path, rel: &str) -> PathBuf {
    base_dir.join(rel)
}

pub fn materialize(
    cfg: &RunConfig,
    base_dir: &Path,
    seed_override: Option<u64>,
) -> Result<Materialized, CliError> {
    let mut effective = cfg.clone();
    if let Some(seed) = seed_override {
        effective.trajectory.seed = seed;
    }

    let (trajectory, steps) = materialize_trajectory(&effective.trajectory, base_dir)?;
    effective.trajectory.steps = Some(steps);

    let policy = build_policy(&effective, steps, base_dir)?;
    policy.validate().map_err(from_core)?;

    let cost = build_cost(&effective.cost)?;
    Ok(Materialized {
        trajectory,
        policy,
        cost,
        effective,
    })
}

fn materialize_trajectory(
    section: &TrajectorySection,
    base_dir: &Path,
) -> Result<(Vec<FeatureTensor>, usize), CliError> {
    if section.kind == KindTag::Replay {
        let rel = section.replay_path.as_deref().ok_or_else(|| {
            CliError::Config("replay trajectories need a replay_path".into())
        })?;
        let steps = tracefile::load_trace(&resolve(base_dir, rel))?;
        if let Some(declared) = section.steps {
            if declared != steps.len() {
                return Err(CliError::Config(format!(
                    "config declares {declared} steps but the trace holds {}",
                    steps.len()
                )));
            }
        }
        let count = steps.len();
        return Ok((steps, count));
    }

    let steps = section.steps.ok_or_else(|| {
        CliError::Config("trajectory.steps is required for synthetic kinds".into())
    })?;
    let spec = TrajectorySpec {
        kind: section.kind.into(),
        steps,
        tokens: section.tokens,
        channels: section.channels,
        degree: section.degree,
        noise_scale: section.noise_scale,
        bursts: section
            .bursts
            .iter()
            .map(|&(start, end, amplitude)| BurstWindow {
                start,
                end,
                amplitude,
            })
            .collect(),
        seed: section.seed,
        replay_path: section.replay_path.clone(),
    };
    let trajectory = trajectory::generate(&spec).map_err(from_core)?;
    Ok((trajectory, steps))
}

fn build_policy(
    cfg: &RunConfig,
    total_steps: usize,
    base_dir: &Path,
) -> Result<PolicyConfig, CliError> {
    let scheme = match cfg.cache.scheme {
        SchemeTag::NewtonForward => CoefficientScheme::NewtonForward,
        SchemeTag::FactorialTaylor => CoefficientScheme::FactorialTaylor,
    };
    let cache = CacheConfig::new(cfg.cache.order, cfg.cache.max_skip, scheme).map_err(from_core)?;

    let [c_mag, c_dir, c_anc, c_vol] = cfg.observer.constants;
    let [w_mag, w_dir, w_anc, w_vol] = cfg.observer.weights;
    let observer = ObserverConfig::new(
        Cues::new(c_mag, c_dir, c_anc, c_vol),
        Cues::new(w_mag, w_dir, w_anc, w_vol),
        cfg.observer.epsilon,
        cfg.observer.gamma,
        cfg.observer.increment_enabled,
    )
    .map_err(from_core)?;

    let threshold = match cfg.controller.mode {
        ControllerMode::Fixed => {
            let tau = cfg.controller.tau.ok_or_else(|| {
                CliError::Config("fixed controller mode needs a tau value".into())
            })?;
            ThresholdRule::Fixed { threshold: tau }
        }
        ControllerMode::Pi => {
            let profile = match &cfg.controller.profile_path {
                Some(rel) => {
                    let file = profile_file::load_profile(&resolve(base_dir, rel))?;
                    profile_file::to_reference_profile(&file)?
                }
                None => ReferenceProfile::identity(),
            };
            let c = &cfg.controller;
            ThresholdRule::Pi(
                ControllerConfig::new(
                    c.n_cap, profile, c.tau0, c.kp, c.ki, c.tau_min, c.tau_max, c.i_min, c.i_max,
                )
                .map_err(from_core)?,
            )
        }
    };

    Ok(PolicyConfig {
        warmup_steps: cfg.policy.warmup,
        total_steps,
        cache,
        observer,
        threshold,
        reset_increment_at_refresh: cfg.policy.reset_increment_at_refresh,
    })
}

fn build_cost(section: &CostSection) -> Result<CostModel, CliError> {
    match section {
        CostSection::Preset { preset } => match preset.as_str() {
            "calibrated" => Ok(CostModel::calibrated()),
            "unit" => Ok(CostModel::unit()),
            other => Err(CliError::Config(format!(
                "unknown cost preset '{other}' (expected 'calibrated' or 'unit')"
            ))),
        },
        CostSection::Explicit {
            full,
            cache,
            observer,
            controller,
        } => CostModel::new(*full, *cache, *observer, *controller).map_err(from_core),
    }
}

/// Rewrites relative file references to absolute ones so a config can be
/// copied elsewhere (e.g. materialized sweep rows) and still run.
pub fn absolutize_paths(cfg: &mut RunConfig, base_dir: &Path) -> Result<(), CliError> {
    if let Some(rel) = &cfg.controller.profile_path {
        let abs = resolve(base_dir, rel);
        let abs = fs::canonicalize(&abs).map_err(|e| {
            CliError::Runtime(format!("profile file {}: {e}", abs.display()))
        })?;
        cfg.controller.profile_path = Some(abs.to_string_lossy().into_owned());
    }
    if let Some(rel) = &cfg.trajectory.replay_path {
        let abs = resolve(base_dir, rel);
        let abs = fs::canonicalize(&abs).map_err(|e| {
            CliError::Runtime(format!("trace file {}: {e}", abs.display()))
        })?;
        cfg.trajectory.replay_path = Some(abs.to_string_lossy().into_owned());
    }
    Ok(())
}
