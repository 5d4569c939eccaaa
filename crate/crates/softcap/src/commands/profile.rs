//! `softcap profile-build <build.json>`: tabulate and freeze a reference
//! profile from a fixed-threshold run over a seed ensemble.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use softcap_core::policy;
use softcap_core::tensor::FeatureTensor;
use softcap_core::trajectory::{self, BurstWindow, TrajectorySpec};

use crate::config::{CacheSection, ObserverSection, PolicySection, TrajectorySection};
use crate::error::{from_core, CliError};
use crate::profile_file::{self, ProfileFile};
use crate::{config, tracefile};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileBuildSpec {
    /// Fixed threshold of the reference policy.
    pub tau_ref: f64,
    /// Trajectory template; its seed is replaced by each ensemble seed.
    pub trajectory: TrajectorySection,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub cache: CacheSection,
    #[serde(default)]
    pub observer: ObserverSection,
    #[serde(default)]
    pub policy: PolicySection,
    /// Output file, relative to the spec; default `profile.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

pub fn cmd_profile_build(
    spec_path: &Path,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<PathBuf, CliError> {
    let mut spec: ProfileBuildSpec = config::load_config(spec_path)?;
    if let Some(seed) = seed_override {
        spec.seeds = vec![seed];
    }
    if spec.seeds.is_empty() {
        return Err(CliError::Config("profile build needs at least one seed".into()));
    }
    let base_dir = spec_path.parent().unwrap_or_else(|| Path::new("."));

    let ensemble = build_ensemble(&spec, base_dir)?;

    // Reuse the run-config plumbing to construct validated core configs.
    let probe = config::RunConfig {
        trajectory: spec.trajectory.clone(),
        cache: spec.cache.clone(),
        observer: spec.observer.clone(),
        controller: Default::default(),
        policy: spec.policy.clone(),
        cost: Default::default(),
    };
    let materialized = config::materialize(&probe, base_dir, Some(spec.seeds[0]))?;

    let profile = policy::build_profile(
        spec.tau_ref,
        &ensemble,
        materialized.policy.warmup_steps,
        &materialized.policy.cache,
        &materialized.policy.observer,
    )
    .map_err(from_core)?;

    let out_path = match out_override {
        Some(p) => p.join("profile.json"),
        None => base_dir.join(spec.out.as_deref().unwrap_or("profile.json")),
    };
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Runtime(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    profile_file::save_profile(
        &out_path,
        &ProfileFile {
            tau_ref: spec.tau_ref,
            knots: profile.knots().to_vec(),
        },
    )?;
    println!(
        "profile-build: frozen tau_ref={} over {} ensemble members, {} knots -> {}",
        spec.tau_ref,
        spec.seeds.len(),
        profile.knots().len(),
        out_path.display()
    );
    Ok(out_path)
}

fn build_ensemble(
    spec: &ProfileBuildSpec,
    base_dir: &Path,
) -> Result<Vec<Vec<FeatureTensor>>, CliError> {
    if spec.trajectory.kind == config::KindTag::Replay {
        let rel = spec.trajectory.replay_path.as_deref().ok_or_else(|| {
            CliError::Config("replay trajectories need a replay_path".into())
        })?;
        let member = tracefile::load_trace(&base_dir.join(rel))?;
        return Ok(vec![member]);
    }
    let steps = spec.trajectory.steps.ok_or_else(|| {
        CliError::Config("trajectory.steps is required for synthetic kinds".into())
    })?;
    spec.seeds
        .iter()
        .map(|&seed| {
            trajectory::generate(&TrajectorySpec {
                kind: spec.trajectory.kind.into(),
                steps,
                tokens: spec.trajectory.tokens,
                channels: spec.trajectory.channels,
                degree: spec.trajectory.degree,
                noise_scale: spec.trajectory.noise_scale,
                bursts: spec
                    .trajectory
                    .bursts
                    .iter()
                    .map(|&(start, end, amplitude)| BurstWindow {
                        start,
                        end,
                        amplitude,
                    })
                    .collect(),
                seed,
                replay_path: None,
            })
            .map_err(from_core)
        })
        .collect()
}
