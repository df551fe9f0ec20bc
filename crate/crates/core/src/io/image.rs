use std::fmt::Write as _;
use std::path::Path;

use super::{check_schema, fields, parse_count, parse_real, split_text, write_atomic, FormatError};
use crate::error::Result;
use crate::real::Real;
use crate::spectra::{CountImage, WavelengthGrid};

pub const IMAGE_SCHEMA: &str = "ghostks-image/1";

/// Leading bytes of the binary image layout: magic, `u32` rows, `u32` cols,
/// `f64` first wavelength, `f64` increment, then `rows * cols` `u64`
/// counts, all little-endian and row-major.
pub const IMAGE_MAGIC: &[u8; 8] = b"GKSIMG1\0";

/// Count image plus the wavelength calibration of its columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedImage<T: Real> {
    pub image: CountImage,
    pub grid: WavelengthGrid<T>,
}

fn calibration_grid<T: Real>(first: T, increment: T, cols: usize) -> Result<WavelengthGrid<T>> {
    if !first.is_finite() {
        return Err(
            FormatError::InvalidCalibration("first wavelength must be finite".into()).into(),
        );
    }
    if !(increment > T::zero()) || !increment.is_finite() {
        return Err(FormatError::InvalidCalibration(format!(
            "increment must be positive, got {increment}"
        ))
        .into());
    }
    WavelengthGrid::uniform(first, increment, cols)
}

/// Parses the text layout: `# first_wavelength_nm=` and `# increment_nm=`
/// header fields followed by whitespace- or comma-separated rows.
pub fn parse_count_image<T: Real>(text: &str) -> Result<CalibratedImage<T>> {
    let file = split_text(text);
    check_schema(&file.schema, IMAGE_SCHEMA, false)?;
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut width = None;
    for &(line, row) in &file.rows {
        let f = fields(row);
        let expected = *width.get_or_insert(f.len());
        if f.len() != expected {
            return Err(FormatError::RaggedRow {
                line,
                expected,
                found: f.len(),
            }
            .into());
        }
        rows.push(
            f.iter()
                .map(|t| parse_count(t, line))
                .collect::<Result<_, _>>()?,
        );
    }
    let calib = |key: &str| -> Result<T> {
        let v = file
            .metadata
            .get(key)
            .ok_or_else(|| FormatError::MissingCalibration(key.to_string()))?;
        Ok(parse_real(v, 0, key)
            .map_err(|_| FormatError::InvalidCalibration(format!("{key}=`{v}` is not a number")))?)
    };
    let first = calib("first_wavelength_nm")?;
    let increment = calib("increment_nm")?;
    if rows.is_empty() {
        return Err(FormatError::TooFewRows {
            needed: 1,
            found: 0,
        }
        .into());
    }
    let image = CountImage::from_rows(rows)?;
    let grid = calibration_grid(first, increment, image.cols())?;
    Ok(CalibratedImage { image, grid })
}

fn parse_binary<T: Real>(bytes: &[u8]) -> Result<CalibratedImage<T>> {
    let bad = |m: &str| FormatError::Parse {
        line: 0,
        message: format!("binary image: {m}"),
    };
    let header = 8 + 4 + 4 + 8 + 8;
    if bytes.len() < header {
        return Err(bad("truncated header").into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (rows, cols) = (u32_at(8), u32_at(12));
    let (first, increment) = (f64_at(16), f64_at(24));
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| bad("dimensions overflow"))?;
    if bytes.len() != header + 8 * n {
        return Err(bad(&format!(
            "expected {} count bytes, found {}",
            8 * n,
            bytes.len() - header
        ))
        .into());
    }
    let data = bytes[header..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let image = CountImage::new(rows, cols, data)?;
    let grid = calibration_grid(T::lit(first), T::lit(increment), cols)?;
    Ok(CalibratedImage { image, grid })
}

/// Loads either layout, detected by [`IMAGE_MAGIC`].
pub fn load_count_image<T: Real>(path: impl AsRef<Path>) -> Result<CalibratedImage<T>> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(IMAGE_MAGIC) {
        return parse_binary(&bytes);
    }
    let text = String::from_utf8(bytes).map_err(|_| FormatError::Parse {
        line: 0,
        message: "image file is neither UTF-8 text nor the binary layout".into(),
    })?;
    parse_count_image(&text)
}

pub fn write_count_image(
    path: impl AsRef<Path>,
    image: &CountImage,
    first_wavelength_nm: f64,
    increment_nm: f64,
) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# schema={IMAGE_SCHEMA}").unwrap();
    writeln!(out, "# first_wavelength_nm={first_wavelength_nm}").unwrap();
    writeln!(out, "# increment_nm={increment_nm}").unwrap();
    for r in 0..image.rows() {
        let row: Vec<String> = image.row(r).iter().map(u64::to_string).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    write_atomic(path.as_ref(), out.as_bytes())?;
    Ok(())
}

pub fn write_count_image_binary(
    path: impl AsRef<Path>,
    image: &CountImage,
    first_wavelength_nm: f64,
    increment_nm: f64,
) -> Result<()> {
    let mut out = Vec::with_capacity(32 + 8 * image.rows() * image.cols());
    out.extend_from_slice(IMAGE_MAGIC);
    out.extend_from_slice(&(image.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(image.cols() as u32).to_le_bytes());
    out.extend_from_slice(&first_wavelength_nm.to_le_bytes());
    out.extend_from_slice(&increment_nm.to_le_bytes());
    for r in 0..image.rows() {
        for v in image.row(r) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_atomic(path.as_ref(), &out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    const FIXTURE: &str = "# first_wavelength_nm=800\n# increment_nm=0.5\n1 2 3\n4 5 6\n";

    #[test]
    fn two_by_three() {
        let c = parse_count_image::<f64>(FIXTURE).unwrap();
        assert_eq!((c.image.rows(), c.image.cols()), (2, 3));
        assert_eq!(c.image.row(1), &[4, 5, 6]);
        assert_eq!(c.grid.centers(), &[800.0, 800.5, 801.0]);
    }

    fn format_err(text: &str) -> FormatError {
        match parse_count_image::<f64>(text) {
            Err(Error::Format(e)) => e,
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn malformed() {
        assert!(matches!(
            format_err("# increment_nm=0.5\n1 2\n"),
            FormatError::MissingCalibration(k) if k == "first_wavelength_nm"
        ));
        assert!(matches!(
            format_err("# first_wavelength_nm=800\n1 2\n"),
            FormatError::MissingCalibration(k) if k == "increment_nm"
        ));
        assert!(matches!(
            format_err("# first_wavelength_nm=800\n# increment_nm=0.5\n1 2 3\n4 5\n"),
            FormatError::RaggedRow {
                line: 4,
                expected: 3,
                found: 2
            }
        ));
        assert!(matches!(
            format_err("# first_wavelength_nm=800\n# increment_nm=0\n1 2\n"),
            FormatError::InvalidCalibration(_)
        ));
        assert!(matches!(
            format_err("# first_wavelength_nm=800\n# increment_nm=1\n1 -2\n"),
            FormatError::NegativeCount { line: 3, .. }
        ));
    }

    #[test]
    fn text_and_binary_round_trip() {
        let c = parse_count_image::<f64>(FIXTURE).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (name, binary) in [("i.txt", false), ("i.bin", true)] {
            let p = dir.path().join(name);
            if binary {
                write_count_image_binary(&p, &c.image, 800.0, 0.5).unwrap();
            } else {
                write_count_image(&p, &c.image, 800.0, 0.5).unwrap();
            }
            assert_eq!(load_count_image::<f64>(&p).unwrap(), c);
        }
    }
}
