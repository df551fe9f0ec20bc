use std::ops::Range;

use super::{BinnedSpectrum, WavelengthGrid};
use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major coincidence-count image: rows are the spatial axis, columns
/// the spectral axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountImage {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl CountImage {
    pub fn new(rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "count image must be non-empty".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "{} values for a {rows}x{cols} image",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::InvalidParameter(format!(
                "row {i} has {} columns, expected {cols}",
                rows[i].len()
            )));
        }
        Self::new(n, cols, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }
}

/// Sums the rows in `roi` into one spectrum on the calibrated `grid`.
pub fn integrate_roi<T: Real>(
    image: &CountImage,
    roi: Range<usize>,
    grid: &WavelengthGrid<T>,
) -> Result<BinnedSpectrum<T>> {
    if roi.is_empty() {
        return Err(Error::InvalidRoi(format!("empty row range {roi:?}")));
    }
    if roi.end > image.rows {
        return Err(Error::InvalidRoi(format!(
            "row range {roi:?} exceeds image height {}",
            image.rows
        )));
    }
    if grid.len() != image.cols {
        return Err(Error::GridMismatch(format!(
            "{}-bin calibration for a {}-column image",
            grid.len(),
            image.cols
        )));
    }
    let mut counts = vec![0u64; image.cols];
    for r in roi {
        for (acc, v) in counts.iter_mut().zip(image.row(r)) {
            *acc += v;
        }
    }
    BinnedSpectrum::new(grid.clone(), counts)
}
