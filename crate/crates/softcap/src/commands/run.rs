//! `softcap run <config.json>`: one recorded run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use softcap_core::policy;

use crate::config::{self, RunConfig};
use crate::error::{from_core, CliError};
use crate::report::{self, WireSummary};

pub struct RunOutputs {
    pub jsonl: PathBuf,
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub wire_summary: WireSummary,
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    summary: &'a WireSummary,
    config: &'a RunConfig,
}

pub fn cmd_run(
    config_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunOutputs, CliError> {
    let cfg: RunConfig = config::load_config(config_path)?;
    let base_dir = config_path.parent().unwrap_or_else(|| Path::new("."));
    execute(&cfg, base_dir, out_dir, seed_override)
}

/// Runs an already-parsed config; shared with the sweep and ablation
/// drivers.
pub fn execute(
    cfg: &RunConfig,
    base_dir: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunOutputs, CliError> {
    let materialized = config::materialize(cfg, base_dir, seed_override)?;
    let trace = policy::run(
        &materialized.trajectory,
        &materialized.policy,
        &materialized.cost,
    )
    .map_err(from_core)?;

    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;

    let jsonl = out_dir.join("trace.jsonl");
    let csv = out_dir.join("trace.csv");
    let summary_path = out_dir.join("summary.json");

    let wire_summary = report::wire_summary(&trace)?;
    write(&jsonl, &report::jsonl_string(&trace)?)?;
    write(&csv, &report::csv_string(&trace))?;
    let doc = SummaryDocument {
        summary: &wire_summary,
        config: &materialized.effective,
    };
    let doc = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Runtime(format!("cannot encode summary: {e}")))?;
    write(&summary_path, &(doc + "\n"))?;

    Ok(RunOutputs {
        jsonl,
        csv,
        summary: summary_path,
        wire_summary,
    })
}

fn write(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
