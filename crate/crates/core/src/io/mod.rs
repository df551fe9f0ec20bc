//! File formats: spectra, count images, scenario configs, sweep and batch
//! tables, report series and a single-document JSON archive.
//!
//! Text files open with `# schema=<name>/<version>` followed by
//! `# key=value` metadata lines, then comma-separated data. Every writer
//! goes through a temporary file in the destination directory and an
//! atomic rename, so an interrupted run never leaves a partial file.

mod archive;
mod config;
mod image;
mod report;
mod spectrum;
mod table;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub use archive::{read_archive, write_archive, SweepArchive, ARCHIVE_SCHEMA};
pub use config::{GridConfig, ScenarioConfig, ScenarioKind, TableConfig, SCENARIO_SCHEMA};
pub use image::{
    load_count_image, parse_count_image, write_count_image, write_count_image_binary,
    CalibratedImage, IMAGE_MAGIC, IMAGE_SCHEMA,
};
pub use report::{
    pvalue_boxes, read_boxes, read_rejection_bars, rejection_bars, write_boxes,
    write_rejection_bars, BarRow, BoxRow, BARS_SCHEMA, BOXES_SCHEMA,
};
pub use spectrum::{
    load_spectrum, parse_spectrum, render_spectrum, save_spectrum, LoadedSpectrum, SPECTRUM_SCHEMA,
};
pub use table::{
    read_batch, read_sweep, render_sweep, sweep_columns, write_batch, write_sweep, BATCH_SCHEMA,
    SWEEP_SCHEMA,
};

/// Ordered `key=value` metadata from a file header.
pub type Metadata = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: wavelength {value} is not above the previous row")]
    NonMonotoneWavelength { line: usize, value: String },

    #[error("line {line}: negative count {value}")]
    NegativeCount { line: usize, value: String },

    #[error("line {line}: count {value} is not an integer")]
    FractionalCount { line: usize, value: String },

    #[error("line {line}: row has {found} values, expected {expected}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("missing calibration field `{0}`")]
    MissingCalibration(String),

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("schema mismatch: expected `{expected}`, found `{found}`")]
    SchemaVersion { expected: String, found: String },

    #[error("need at least {needed} data rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("archive: {0}")]
    Archive(String),
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".ghostks-")
        .suffix(".part")
        .tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Header and data lines of a text file, with 1-based line numbers.
pub(crate) struct TextFile<'a> {
    pub schema: Option<(usize, String)>,
    pub metadata: Metadata,
    pub rows: Vec<(usize, &'a str)>,
}

pub(crate) fn split_text(text: &str) -> TextFile<'_> {
    let mut schema = None;
    let mut metadata = Metadata::new();
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                if k == "schema" {
                    schema = Some((i + 1, v.to_string()));
                } else {
                    metadata.insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        rows.push((i + 1, line));
    }
    TextFile {
        schema,
        metadata,
        rows,
    }
}

pub(crate) fn check_schema(
    found: &Option<(usize, String)>,
    expected: &str,
    required: bool,
) -> Result<(), FormatError> {
    match found {
        Some((_, s)) if s == expected => Ok(()),
        Some((_, s)) => Err(FormatError::SchemaVersion {
            expected: expected.to_string(),
            found: s.clone(),
        }),
        None if required => Err(FormatError::SchemaVersion {
            expected: expected.to_string(),
            found: "<none>".to_string(),
        }),
        None => Ok(()),
    }
}

pub(crate) fn fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Strict non-negative integer count.
pub(crate) fn parse_count(token: &str, line: usize) -> Result<u64, FormatError> {
    if let Ok(v) = token.parse::<u64>() {
        return Ok(v);
    }
    if let Ok(v) = token.parse::<i128>() {
        return if v < 0 {
            Err(FormatError::NegativeCount {
                line,
                value: token.to_string(),
            })
        } else {
            Err(parse_err(line, format!("count {token} too large")))
        };
    }
    match token.parse::<f64>() {
        Ok(f) if f.is_nan() => Err(parse_err(line, format!("invalid count `{token}`"))),
        Ok(f) if f < 0.0 => Err(FormatError::NegativeCount {
            line,
            value: token.to_string(),
        }),
        Ok(_) => Err(FormatError::FractionalCount {
            line,
            value: token.to_string(),
        }),
        Err(_) => Err(parse_err(line, format!("invalid count `{token}`"))),
    }
}

pub(crate) fn parse_real<T: crate::Real>(
    token: &str,
    line: usize,
    what: &str,
) -> Result<T, FormatError> {
    match token.parse::<T>() {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => Err(parse_err(line, format!("invalid {what} `{token}`"))),
    }
}
