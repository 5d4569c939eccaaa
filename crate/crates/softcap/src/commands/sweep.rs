//! `softcap sweep <sweep.json>`: run the policy across a cap grid and a seed
//! ensemble, emitting per-row and per-cap tables plus plot-ready data.
//!
//! Every row's fully resolved config is written under `rows/`, so any row is
//! reproducible with a standalone `softcap run`. Rows execute in parallel
//! (`--jobs`), but outputs always follow spec order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::run;
use crate::config::{self, RunConfig};
use crate::error::CliError;
use crate::report::WireSummary;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Soft caps to sweep, strictly increasing.
    pub caps: Vec<usize>,
    /// Trajectory seeds forming the ensemble.
    pub seeds: Vec<u64>,
    /// Run config template; `controller.n_cap` and `trajectory.seed` are
    /// overridden per row.
    pub template: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.caps.is_empty() {
            return Err(CliError::Config("sweep needs at least one cap".into()));
        }
        if !self.caps.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::Config("caps must be strictly increasing".into()));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("sweep needs at least one seed".into()));
        }
        Ok(())
    }
}

pub struct SweepOutputs {
    pub rows_csv: PathBuf,
    pub caps_csv: PathBuf,
    pub plot_csv: PathBuf,
    pub row_configs: Vec<PathBuf>,
}

pub const ROWS_HEADER: &str =
    "cap,seed,actual_full,crossing_full,warmup_full,guard_full,total_cost,speedup";

pub fn cmd_sweep(
    spec_path: &Path,
    out_override: Option<&Path>,
    jobs: usize,
    seed_override: Option<u64>,
) -> Result<SweepOutputs, CliError> {
    let mut spec: SweepSpec = config::load_config(spec_path)?;
    if let Some(seed) = seed_override {
        spec.seeds = vec![seed];
    }
    spec.validate()?;

    let base_dir = spec_path.parent().unwrap_or_else(|| Path::new("."));
    let out_dir = resolve_out_dir(out_override, spec.out_dir.as_deref(), base_dir);
    let rows_dir = out_dir.join("rows");
    fs::create_dir_all(&rows_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", rows_dir.display())))?;

    // Freeze file references so materialized rows run from anywhere.
    let mut template = spec.template.clone();
    config::absolutize_paths(&mut template, base_dir)?;

    // Materialize one config per (cap, seed) row, in spec order.
    let mut rows: Vec<(usize, u64, RunConfig, PathBuf)> = Vec::new();
    for &cap in &spec.caps {
        for &seed in &spec.seeds {
            let mut row = template.clone();
            row.controller.n_cap = cap;
            row.trajectory.seed = seed;
            let path = rows_dir.join(format!("cap{cap}_seed{seed}.json"));
            let text = serde_json::to_string_pretty(&row)
                .map_err(|e| CliError::Runtime(format!("cannot encode row config: {e}")))?;
            fs::write(&path, text + "\n")
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
            rows.push((cap, seed, row, path));
        }
    }

    let results = run_rows(&rows, &rows_dir, jobs)?;

    // Per-row CSV (successful rows only; failures are logged separately).
    let mut rows_csv = String::from(ROWS_HEADER);
    rows_csv.push('\n');
    let mut failures = Vec::new();
    for ((cap, seed, _, _), result) in rows.iter().zip(&results) {
        match result {
            Ok(summary) => {
                let _ = writeln!(
                    rows_csv,
                    "{cap},{seed},{},{},{},{},{},{}",
                    summary.actual_full,
                    summary.crossing_full,
                    summary.warmup_full,
                    summary.guard_full,
                    summary.total_cost,
                    summary.speedup
                );
            }
            Err(e) => failures.push(format!("cap={cap} seed={seed}: {e}")),
        }
    }
    let rows_path = out_dir.join("sweep_rows.csv");
    fs::write(&rows_path, &rows_csv)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", rows_path.display())))?;

    // Per-cap means, mirroring the target-sweep table shape.
    let mut caps_csv = String::from(
        "cap,mean_actual_full,mean_crossing_full,mean_warmup_full,mean_guard_full,\
         mean_total_cost,mean_speedup\n",
    );
    let mut plot_csv = String::from("cap,mean_actual_full\n");
    println!("cap  actual_full  crossing_full  warmup_full");
    for &cap in &spec.caps {
        let summaries: Vec<&WireSummary> = rows
            .iter()
            .zip(&results)
            .filter(|((c, _, _, _), r)| *c == cap && r.is_ok())
            .map(|(_, r)| r.as_ref().expect("filtered to ok"))
            .collect();
        if summaries.is_empty() {
            continue;
        }
        let n = summaries.len() as f64;
        let mean = |f: &dyn Fn(&WireSummary) -> f64| summaries.iter().map(|s| f(s)).sum::<f64>() / n;
        let actual = mean(&|s| s.actual_full as f64);
        let crossing = mean(&|s| s.crossing_full as f64);
        let warmup = mean(&|s| s.warmup_full as f64);
        let guard = mean(&|s| s.guard_full as f64);
        let cost = mean(&|s| s.total_cost);
        let speedup = mean(&|s| s.speedup);
        let _ = writeln!(
            caps_csv,
            "{cap},{actual},{crossing},{warmup},{guard},{cost},{speedup}"
        );
        let _ = writeln!(plot_csv, "{cap},{actual}");
        println!("{cap:<4} {actual:<12.2} {crossing:<14.2} {warmup:<11.2}");
    }
    let caps_path = out_dir.join("sweep_caps.csv");
    fs::write(&caps_path, &caps_csv)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", caps_path.display())))?;
    let plot_path = out_dir.join("plot_actual_full.csv");
    fs::write(&plot_path, &plot_csv)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", plot_path.display())))?;

    if !failures.is_empty() {
        let errors_path = out_dir.join("sweep_errors.txt");
        fs::write(&errors_path, failures.join("\n") + "\n").map_err(|e| {
            CliError::Runtime(format!("cannot write {}: {e}", errors_path.display()))
        })?;
        return Err(CliError::Partial(format!(
            "{} of {} rows failed; see {}",
            failures.len(),
            rows.len(),
            errors_path.display()
        )));
    }

    Ok(SweepOutputs {
        rows_csv: rows_path,
        caps_csv: caps_path,
        plot_csv: plot_path,
        row_configs: rows.into_iter().map(|(_, _, _, p)| p).collect(),
    })
}

/// Executes rows on a bounded pool; result order follows input order.
fn run_rows(
    rows: &[(usize, u64, RunConfig, PathBuf)],
    rows_dir: &Path,
    jobs: usize,
) -> Result<Vec<Result<WireSummary, CliError>>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(|| {
        rows.par_iter()
            .map(|(cap, seed, cfg, _)| {
                let row_out = rows_dir.join(format!("cap{cap}_seed{seed}"));
                run::execute(cfg, rows_dir, &row_out, None).map(|o| o.wire_summary)
            })
            .collect()
    }))
}

pub fn resolve_out_dir(
    flag: Option<&Path>,
    spec_field: Option<&str>,
    base_dir: &Path,
) -> PathBuf {
    match (flag, spec_field) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(rel)) => base_dir.join(rel),
        (None, None) => PathBuf::from("softcap_out"),
    }
}
