//! Wire encodings of a run trace.
//!
//! JSONL: one step object per line, then one trailing summary object.
//! CSV: a header plus one row per step, same fields in the same order.
//! Both encodings print floats with the shortest representation that parses
//! back to the identical f64, so their numeric values agree exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use softcap_core::policy::{Action, Reason, RunTrace, StepRecord};

use crate::error::{from_core, CliError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireStep {
    pub step: usize,
    pub action: String,
    pub reason: String,
    pub f_mag: f64,
    pub f_dir: f64,
    pub f_anc: f64,
    pub f_vol: f64,
    pub phi_mag: f64,
    pub phi_dir: f64,
    pub phi_anc: f64,
    pub phi_vol: f64,
    pub s_base: f64,
    pub ds: f64,
    pub s: f64,
    pub threshold: f64,
    pub error: f64,
    pub integral: f64,
    pub n_actual: usize,
    pub cache_distance: usize,
    pub cost: f64,
    pub approx_l2: f64,
}

pub const CSV_HEADER: &str = "step,action,reason,f_mag,f_dir,f_anc,f_vol,phi_mag,phi_dir,\
phi_anc,phi_vol,s_base,ds,s,threshold,error,integral,n_actual,cache_distance,cost,approx_l2";

impl WireStep {
    pub fn from_record(rec: &StepRecord) -> Self {
        Self {
            step: rec.step,
            action: action_token(rec.action).into(),
            reason: reason_token(rec.reason).into(),
            f_mag: rec.report.raw.magnitude,
            f_dir: rec.report.raw.direction,
            f_anc: rec.report.raw.anchor,
            f_vol: rec.report.raw.volatility,
            phi_mag: rec.report.normalized.magnitude,
            phi_dir: rec.report.normalized.direction,
            phi_anc: rec.report.normalized.anchor,
            phi_vol: rec.report.normalized.volatility,
            s_base: rec.report.base,
            ds: rec.report.increment,
            s: rec.report.score,
            threshold: rec.threshold,
            error: rec.error,
            integral: rec.integral,
            n_actual: rec.n_actual_after,
            cache_distance: rec.cache_distance,
            cost: rec.cost,
            approx_l2: rec.approx_l2,
        }
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.action,
            self.reason,
            self.f_mag,
            self.f_dir,
            self.f_anc,
            self.f_vol,
            self.phi_mag,
            self.phi_dir,
            self.phi_anc,
            self.phi_vol,
            self.s_base,
            self.ds,
            self.s,
            self.threshold,
            self.error,
            self.integral,
            self.n_actual,
            self.cache_distance,
            self.cost,
            self.approx_l2
        )
    }
}

fn action_token(action: Action) -> &'static str {
    match action {
        Action::Full => "full",
        Action::Cache => "cache",
    }
}

fn reason_token(reason: Reason) -> &'static str {
    match reason {
        Reason::Warmup => "warmup",
        Reason::Guard => "guard",
        Reason::Crossing => "crossing",
        Reason::Cache => "cache",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSummary {
    pub actual_full: usize,
    pub crossing_full: usize,
    pub warmup_full: usize,
    pub guard_full: usize,
    pub total_cost: f64,
    pub mean_cache_l2: f64,
    pub speedup: f64,
}

pub fn wire_summary(trace: &RunTrace) -> Result<WireSummary, CliError> {
    let s = &trace.summary;
    let speedup = trace
        .cost_model
        .speedup(s.total_cost, trace.policy.total_steps)
        .map_err(from_core)?;
    Ok(WireSummary {
        actual_full: s.actual_full,
        crossing_full: s.crossing_full,
        warmup_full: s.warmup_full,
        guard_full: s.guard_full,
        total_cost: s.total_cost,
        mean_cache_l2: s.mean_cache_l2,
        speedup,
    })
}

pub fn jsonl_string(trace: &RunTrace) -> Result<String, CliError> {
    let mut out = String::new();
    for rec in &trace.steps {
        let line = serde_json::to_string(&WireStep::from_record(rec))
            .map_err(|e| CliError::Runtime(format!("cannot encode step record: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    let summary = serde_json::to_string(&wire_summary(trace)?)
        .map_err(|e| CliError::Runtime(format!("cannot encode summary: {e}")))?;
    out.push_str(&summary);
    out.push('\n');
    Ok(out)
}

pub fn csv_string(trace: &RunTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    for rec in &trace.steps {
        let _ = writeln!(out, "{}", WireStep::from_record(rec).csv_row());
    }
    out
}

/// Parses a JSONL trace back into step records plus the trailing summary.
pub fn parse_jsonl(text: &str) -> Result<(Vec<WireStep>, WireSummary), CliError> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let (last, steps) = lines
        .split_last()
        .ok_or_else(|| CliError::Runtime("empty JSONL trace".into()))?;
    let steps = steps
        .iter()
        .map(|line| {
            serde_json::from_str::<WireStep>(line)
                .map_err(|e| CliError::Runtime(format!("bad step line: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let summary = serde_json::from_str::<WireSummary>(last)
        .map_err(|e| CliError::Runtime(format!("bad summary line: {e}")))?;
    Ok((steps, summary))
}

/// Parses a CSV trace back into step records.
pub fn parse_csv(text: &str) -> Result<Vec<WireStep>, CliError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Runtime("empty CSV trace".into()))?;
    if header != CSV_HEADER {
        return Err(CliError::Runtime("unexpected CSV header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(parse_csv_row)
        .collect()
}

fn parse_csv_row(line: &str) -> Result<WireStep, CliError> {
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != 21 {
        return Err(CliError::Runtime(format!(
            "expected 21 CSV cells, found {}",
            cells.len()
        )));
    }
    let int = |i: usize| -> Result<usize, CliError> {
        cells[i]
            .parse()
            .map_err(|_| CliError::Runtime(format!("bad integer cell '{}'", cells[i])))
    };
    let num = |i: usize| -> Result<f64, CliError> {
        cells[i]
            .parse()
            .map_err(|_| CliError::Runtime(format!("bad numeric cell '{}'", cells[i])))
    };
    Ok(WireStep {
        step: int(0)?,
        action: cells[1].into(),
        reason: cells[2].into(),
        f_mag: num(3)?,
        f_dir: num(4)?,
        f_anc: num(5)?,
        f_vol: num(6)?,
        phi_mag: num(7)?,
        phi_dir: num(8)?,
        phi_anc: num(9)?,
        phi_vol: num(10)?,
        s_base: num(11)?,
        ds: num(12)?,
        s: num(13)?,
        threshold: num(14)?,
        error: num(15)?,
        integral: num(16)?,
        n_actual: int(17)?,
        cache_distance: int(18)?,
        cost: num(19)?,
        approx_l2: num(20)?,
    })
}
