//! `softcap ablate <ablation.json>`: controlled variants of one baseline
//! config.
//!
//! Modes:
//! - `controller`: the PI baseline against a fixed-threshold grid, marking
//!   the fixed row whose mean Full count matches the PI row most closely;
//! - `cue-leave-one-out`: drop one cue at a time, renormalizing the rest;
//! - `cue-isolated`: one cue at a time with weight one;
//! - `weight-grid`: explicit weight tuples (each must sum to one);
//! - `increment-on-off`: the positive-increment switch.
//!
//! Every variant runs over the seed ensemble; the report carries
//! per-variant means. Variant configs are materialized under `rows/`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::run;
use crate::commands::sweep::resolve_out_dir;
use crate::config::{self, ControllerMode, RunConfig};
use crate::error::CliError;
use crate::report::WireSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    Controller,
    CueLeaveOneOut,
    CueIsolated,
    WeightGrid,
    IncrementOnOff,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSpec {
    pub mode: AblationMode,
    pub template: RunConfig,
    /// Trajectory seeds; defaults to the template's seed.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// `weight-grid` mode: tuples (magnitude, direction, anchor, volatility).
    #[serde(default)]
    pub weight_grid: Vec<[f64; 4]>,
    /// `controller` mode: fixed thresholds to compare against; defaults to
    /// 0.05..=0.95 step 0.05.
    #[serde(default)]
    pub fixed_thresholds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

pub const ABLATION_HEADER: &str = "variant,actual_full,total_cost,mean_cache_l2,matched";

pub struct AblationOutputs {
    pub report_csv: PathBuf,
    pub variants: Vec<(String, f64)>,
}

const CUE_NAMES: [&str; 4] = ["magnitude", "direction", "anchor", "volatility"];

pub fn cmd_ablate(
    spec_path: &Path,
    out_override: Option<&Path>,
    jobs: usize,
    seed_override: Option<u64>,
) -> Result<AblationOutputs, CliError> {
    let mut spec: AblationSpec = config::load_config(spec_path)?;
    if let Some(seed) = seed_override {
        spec.seeds = vec![seed];
    }
    if spec.seeds.is_empty() {
        spec.seeds = vec![spec.template.trajectory.seed];
    }

    let base_dir = spec_path.parent().unwrap_or_else(|| Path::new("."));
    let out_dir = resolve_out_dir(out_override, spec.out_dir.as_deref(), base_dir);
    let rows_dir = out_dir.join("rows");
    fs::create_dir_all(&rows_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", rows_dir.display())))?;

    let mut template = spec.template.clone();
    config::absolutize_paths(&mut template, base_dir)?;

    let variants = build_variants(&spec, &template)?;

    // One run per (variant, seed), parallel, means folded in variant order.
    let jobs_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot build thread pool: {e}")))?;
    let mut cases: Vec<(usize, u64, RunConfig, PathBuf)> = Vec::new();
    for (i, (name, cfg)) in variants.iter().enumerate() {
        for &seed in &spec.seeds {
            let mut row = cfg.clone();
            row.trajectory.seed = seed;
            let path = rows_dir.join(format!("{name}_seed{seed}.json"));
            let text = serde_json::to_string_pretty(&row)
                .map_err(|e| CliError::Runtime(format!("cannot encode row config: {e}")))?;
            fs::write(&path, text + "\n")
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
            cases.push((i, seed, row, path));
        }
    }
    let results: Vec<Result<WireSummary, CliError>> = jobs_pool.install(|| {
        cases
            .par_iter()
            .map(|(i, seed, cfg, _)| {
                let row_out = rows_dir.join(format!("{}_seed{seed}", variants[*i].0));
                run::execute(cfg, &rows_dir, &row_out, None).map(|o| o.wire_summary)
            })
            .collect()
    });

    let mut failures = Vec::new();
    let mut mean_actual = vec![0.0f64; variants.len()];
    let mut mean_cost = vec![0.0f64; variants.len()];
    let mut mean_l2 = vec![0.0f64; variants.len()];
    let mut counts = vec![0usize; variants.len()];
    for ((i, seed, _, _), result) in cases.iter().zip(&results) {
        match result {
            Ok(s) => {
                mean_actual[*i] += s.actual_full as f64;
                mean_cost[*i] += s.total_cost;
                mean_l2[*i] += s.mean_cache_l2;
                counts[*i] += 1;
            }
            Err(e) => failures.push(format!("{} seed={seed}: {e}", variants[*i].0)),
        }
    }
    for i in 0..variants.len() {
        if counts[i] > 0 {
            let n = counts[i] as f64;
            mean_actual[i] /= n;
            mean_cost[i] /= n;
            mean_l2[i] /= n;
        }
    }

    // Controller mode: mark the fixed row closest to the PI row in mean
    // realized Fulls.
    let matched_index = if spec.mode == AblationMode::Controller && counts[0] > 0 {
        let target = mean_actual[0];
        variants
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(i, _)| counts[*i] > 0)
            .min_by(|(a, _), (b, _)| {
                (mean_actual[*a] - target)
                    .abs()
                    .total_cmp(&(mean_actual[*b] - target).abs())
            })
            .map(|(i, _)| i)
    } else {
        None
    };

    let mut csv = String::from(ABLATION_HEADER);
    csv.push('\n');
    println!("variant                    actual_full  total_cost    mean_cache_l2");
    for (i, (name, _)) in variants.iter().enumerate() {
        if counts[i] == 0 {
            continue;
        }
        let matched = if Some(i) == matched_index { "yes" } else { "" };
        let _ = writeln!(
            csv,
            "{name},{},{},{},{matched}",
            mean_actual[i], mean_cost[i], mean_l2[i]
        );
        println!(
            "{name:<26} {:<12.2} {:<13.4} {:.6}",
            mean_actual[i], mean_cost[i], mean_l2[i]
        );
    }
    let report_path = out_dir.join("ablation.csv");
    fs::write(&report_path, &csv)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", report_path.display())))?;

    if !failures.is_empty() {
        let errors_path = out_dir.join("ablation_errors.txt");
        fs::write(&errors_path, failures.join("\n") + "\n").map_err(|e| {
            CliError::Runtime(format!("cannot write {}: {e}", errors_path.display()))
        })?;
        return Err(CliError::Partial(format!(
            "{} of {} rows failed; see {}",
            failures.len(),
            cases.len(),
            errors_path.display()
        )));
    }

    Ok(AblationOutputs {
        report_csv: report_path,
        variants: variants
            .iter()
            .enumerate()
            .map(|(i, (name, _))| (name.clone(), mean_actual[i]))
            .collect(),
    })
}

fn build_variants(
    spec: &AblationSpec,
    template: &RunConfig,
) -> Result<Vec<(String, RunConfig)>, CliError> {
    let mut variants = Vec::new();
    match spec.mode {
        AblationMode::Controller => {
            let mut pi = template.clone();
            pi.controller.mode = ControllerMode::Pi;
            variants.push(("pi".to_string(), pi));
            let taus = if spec.fixed_thresholds.is_empty() {
                (1..=19).map(|i| i as f64 * 0.05).collect()
            } else {
                spec.fixed_thresholds.clone()
            };
            for tau in taus {
                if !(tau > 0.0 && tau < 1.0) {
                    return Err(CliError::Config(format!(
                        "fixed threshold {tau} must lie in (0, 1)"
                    )));
                }
                let mut fixed = template.clone();
                fixed.controller.mode = ControllerMode::Fixed;
                fixed.controller.tau = Some(tau);
                variants.push((format!("fixed-{tau:.2}"), fixed));
            }
        }
        AblationMode::CueLeaveOneOut => {
            for (i, name) in CUE_NAMES.iter().enumerate() {
                let weights = template.observer.weights;
                let removed = weights[i];
                let remaining = 1.0 - removed;
                if remaining <= 0.0 {
                    return Err(CliError::Config(format!(
                        "cannot drop cue '{name}': it carries all the weight"
                    )));
                }
                let mut w = weights;
                w[i] = 0.0;
                for v in w.iter_mut() {
                    *v /= remaining;
                }
                let mut cfg = template.clone();
                cfg.observer.weights = w;
                variants.push((format!("drop-{name}"), cfg));
            }
        }
        AblationMode::CueIsolated => {
            for (i, name) in CUE_NAMES.iter().enumerate() {
                let mut w = [0.0; 4];
                w[i] = 1.0;
                let mut cfg = template.clone();
                cfg.observer.weights = w;
                variants.push((format!("only-{name}"), cfg));
            }
        }
        AblationMode::WeightGrid => {
            if spec.weight_grid.is_empty() {
                return Err(CliError::Config("weight-grid mode needs weight tuples".into()));
            }
            for w in &spec.weight_grid {
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(CliError::Config(format!(
                        "weight tuple {w:?} sums to {sum}, not 1"
                    )));
                }
                let mut cfg = template.clone();
                cfg.observer.weights = *w;
                variants.push((
                    format!("w-{:.2}-{:.2}-{:.2}-{:.2}", w[0], w[1], w[2], w[3]),
                    cfg,
                ));
            }
        }
        AblationMode::IncrementOnOff => {
            let mut off = template.clone();
            off.observer.increment_enabled = false;
            variants.push(("increment-off".to_string(), off));
            let mut on = template.clone();
            on.observer.increment_enabled = true;
            variants.push(("increment-on".to_string(), on));
        }
    }
    Ok(variants)
}
