//! Reference-profile files: `{"tau_ref": <real>, "knots": [[p, C], ...]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use softcap_core::controller::ReferenceProfile;

use crate::error::{from_core, CliError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub tau_ref: f64,
    pub knots: Vec<(f64, f64)>,
}

pub fn save_profile(path: &Path, profile: &ProfileFile) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(profile)
        .map_err(|e| CliError::Runtime(format!("cannot encode profile: {e}")))?;
    fs::write(path, text + "\n")
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn load_profile(path: &Path) -> Result<ProfileFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read profile {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("malformed profile {}: {e}", path.display())))
}

pub fn to_reference_profile(file: &ProfileFile) -> Result<ReferenceProfile, CliError> {
    ReferenceProfile::new(file.knots.clone()).map_err(from_core)
}
