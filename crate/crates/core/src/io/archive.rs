use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_atomic, FormatError};
use crate::error::Result;
use crate::mc::SweepResult;
use crate::real::Real;

use super::ScenarioConfig;

pub const ARCHIVE_SCHEMA: &str = "ghostks-archive/1";

/// Single JSON document holding a sweep and, optionally, the scenario
/// config it was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepArchive<T: Real> {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    pub sweep: SweepResult<T>,
}

impl<T: Real> SweepArchive<T> {
    pub fn new(sweep: SweepResult<T>, scenario: Option<ScenarioConfig>) -> Self {
        Self {
            schema: ARCHIVE_SCHEMA.to_string(),
            scenario,
            sweep,
        }
    }
}

pub fn write_archive<T: Real>(archive: &SweepArchive<T>, path: impl AsRef<Path>) -> Result<()> {
    let json =
        serde_json::to_string_pretty(archive).map_err(|e| FormatError::Archive(e.to_string()))?;
    write_atomic(path.as_ref(), json.as_bytes())?;
    Ok(())
}

pub fn read_archive<T: Real>(path: impl AsRef<Path>) -> Result<SweepArchive<T>> {
    let text = std::fs::read_to_string(path)?;
    let archive: SweepArchive<T> =
        serde_json::from_str(&text).map_err(|e| FormatError::Archive(e.to_string()))?;
    if archive.schema != ARCHIVE_SCHEMA {
        return Err(FormatError::SchemaVersion {
            expected: ARCHIVE_SCHEMA.to_string(),
            found: archive.schema,
        }
        .into());
    }
    Ok(archive)
}
