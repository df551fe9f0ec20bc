use std::fmt::Write as _;
use std::path::Path;

use super::{
    check_schema, fields, parse_count, parse_real, split_text, write_atomic, FormatError, Metadata,
};
use crate::error::Result;
use crate::real::Real;
use crate::spectra::{BinnedSpectrum, WavelengthGrid};

pub const SPECTRUM_SCHEMA: &str = "ghostks-spectrum/1";

/// A spectrum together with the header metadata it was stored with
/// (e.g. `accumulation_time_s`, `detector`, `seed`, `rng`).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSpectrum<T: Real> {
    pub spectrum: BinnedSpectrum<T>,
    pub metadata: Metadata,
}

/// Parses a two-column `wavelength_nm,count` table.
///
/// The schema line is optional so hand-written files load; when present it
/// must match. A single non-numeric column-header row is skipped.
pub fn parse_spectrum<T: Real>(text: &str) -> Result<LoadedSpectrum<T>> {
    let file = split_text(text);
    check_schema(&file.schema, SPECTRUM_SCHEMA, false)?;
    let mut wavelengths: Vec<T> = Vec::new();
    let mut counts = Vec::new();
    for (idx, &(line, row)) in file.rows.iter().enumerate() {
        let f = fields(row);
        if idx == 0 && f.first().is_some_and(|t| t.parse::<f64>().is_err()) {
            continue;
        }
        if f.len() != 2 {
            return Err(super::parse_err(
                line,
                format!("expected `wavelength,count`, found {} fields", f.len()),
            )
            .into());
        }
        let w: T = parse_real(f[0], line, "wavelength")?;
        if !w.is_finite() {
            return Err(super::parse_err(line, "wavelength must be finite").into());
        }
        if let Some(prev) = wavelengths.last() {
            if w <= *prev {
                return Err(FormatError::NonMonotoneWavelength {
                    line,
                    value: f[0].to_string(),
                }
                .into());
            }
        }
        counts.push(parse_count(f[1], line)?);
        wavelengths.push(w);
    }
    if wavelengths.len() < 2 {
        return Err(FormatError::TooFewRows {
            needed: 2,
            found: wavelengths.len(),
        }
        .into());
    }
    let grid = WavelengthGrid::new(wavelengths)?;
    Ok(LoadedSpectrum {
        spectrum: BinnedSpectrum::new(grid, counts)?,
        metadata: file.metadata,
    })
}

pub fn load_spectrum<T: Real>(path: impl AsRef<Path>) -> Result<LoadedSpectrum<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_spectrum(&text)
}

pub fn render_spectrum<T: Real>(spectrum: &BinnedSpectrum<T>, metadata: &Metadata) -> String {
    let mut out = String::new();
    writeln!(out, "# schema={SPECTRUM_SCHEMA}").unwrap();
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}").unwrap();
    }
    out.push_str("wavelength_nm,count\n");
    for (w, c) in spectrum.grid().centers().iter().zip(spectrum.counts()) {
        writeln!(out, "{w},{c}").unwrap();
    }
    out
}

pub fn save_spectrum<T: Real>(
    path: impl AsRef<Path>,
    spectrum: &BinnedSpectrum<T>,
    metadata: &Metadata,
) -> Result<()> {
    write_atomic(
        path.as_ref(),
        render_spectrum(spectrum, metadata).as_bytes(),
    )?;
    Ok(())
}
