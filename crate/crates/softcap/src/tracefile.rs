//! Recorded-trajectory files.
//!
//! Text form:
//!
//! ```text
//! SOFTCAP-TRACE v1 T=<int> tokens=<int> channels=<int>
//! <value value ...>          one line per step, row-major
//! ```
//!
//! An equivalent JSON form is also accepted on load:
//! `{"meta": {"T": .., "tokens": .., "channels": ..}, "steps": [[..], ..]}`.
//!
//! Values are written with the shortest representation that parses back to
//! the identical f64, so save/load round-trips bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use softcap_core::tensor::FeatureTensor;

use crate::error::CliError;

const HEADER_TAG: &str = "SOFTCAP-TRACE v1";

pub fn save_trace(path: &Path, steps: &[FeatureTensor]) -> Result<(), CliError> {
    if steps.is_empty() {
        return Err(CliError::Runtime("refusing to save an empty trace".into()));
    }
    let (tokens, channels) = steps[0].shape();
    if steps.iter().any(|s| s.shape() != (tokens, channels)) {
        return Err(CliError::Runtime(
            "trace tensors must share one shape".into(),
        ));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{HEADER_TAG} T={} tokens={tokens} channels={channels}",
        steps.len()
    );
    for step in steps {
        let mut first = true;
        for v in step.data() {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn load_trace(path: &Path) -> Result<Vec<FeatureTensor>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let parsed = if text.trim_start().starts_with('{') {
        parse_json(&text)
    } else {
        parse_text(&text)
    };
    parsed.map_err(|msg| CliError::Runtime(format!("{}: {msg}", path.display())))
}

fn parse_text(text: &str) -> Result<Vec<FeatureTensor>, String> {
    let mut lines = text.lines();
    let header = lines.next().filter(|l| !l.trim().is_empty());
    let header = header.ok_or_else(|| "missing header".to_string())?;
    let rest = header
        .strip_prefix(HEADER_TAG)
        .ok_or_else(|| "missing header".to_string())?;

    let (mut total, mut tokens, mut channels) = (None, None, None);
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| format!("malformed header field '{token}'"))?;
        let value: usize = value
            .parse()
            .map_err(|_| format!("malformed header value '{token}'"))?;
        match key {
            "T" => total = Some(value),
            "tokens" => tokens = Some(value),
            "channels" => channels = Some(value),
            _ => return Err(format!("unknown header field '{key}'")),
        }
    }
    let total = total.ok_or("header is missing T")?;
    let tokens = tokens.ok_or("header is missing tokens")?;
    let channels = channels.ok_or("header is missing channels")?;

    let mut steps = Vec::with_capacity(total);
    for t in 0..total {
        let line = lines
            .next()
            .ok_or_else(|| format!("step {t}: missing tensor line"))?;
        let mut data = Vec::with_capacity(tokens * channels);
        for raw in line.split_whitespace() {
            let v: f64 = raw
                .parse()
                .map_err(|_| format!("step {t}: invalid value '{raw}'"))?;
            data.push(v);
        }
        if data.len() != tokens * channels {
            return Err(format!(
                "step {t}: expected {} values, found {}",
                tokens * channels,
                data.len()
            ));
        }
        let tensor = FeatureTensor::new(data, tokens, channels)
            .map_err(|e| format!("step {t}: {e}"))?;
        steps.push(tensor);
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(format!("trailing data after the declared {total} steps"));
    }
    Ok(steps)
}

#[derive(Deserialize)]
struct JsonTrace {
    meta: JsonMeta,
    steps: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct JsonMeta {
    #[serde(rename = "T")]
    total: usize,
    tokens: usize,
    channels: usize,
}

fn parse_json(text: &str) -> Result<Vec<FeatureTensor>, String> {
    let trace: JsonTrace = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let meta = &trace.meta;
    if trace.steps.len() != meta.total {
        return Err(format!(
            "step {}: missing tensor (declared T={}, found {})",
            trace.steps.len().min(meta.total),
            meta.total,
            trace.steps.len()
        ));
    }
    trace
        .steps
        .into_iter()
        .enumerate()
        .map(|(t, data)| {
            if data.len() != meta.tokens * meta.channels {
                return Err(format!(
                    "step {t}: expected {} values, found {}",
                    meta.tokens * meta.channels,
                    data.len()
                ));
            }
            FeatureTensor::new(data, meta.tokens, meta.channels)
                .map_err(|e| format!("step {t}: {e}"))
        })
        .collect()
}
