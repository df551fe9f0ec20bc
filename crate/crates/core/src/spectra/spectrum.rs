use serde::{Deserialize, Serialize};

use super::WavelengthGrid;
use crate::error::{Error, Result};
use crate::real::Real;

/// Photon counts per wavelength bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BinnedSpectrum<T: Real> {
    grid: WavelengthGrid<T>,
    counts: Vec<u64>,
    total: u64,
}

impl<T: Real> BinnedSpectrum<T> {
    pub fn new(grid: WavelengthGrid<T>, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} counts for a {}-bin grid",
                counts.len(),
                grid.len()
            )));
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::InvalidParameter("total count overflows u64".into()))?;
        Ok(Self {
            grid,
            counts,
            total,
        })
    }

    pub fn grid(&self) -> &WavelengthGrid<T> {
        &self.grid
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Same counts on a different grid of equal length.
    pub fn with_grid(&self, grid: WavelengthGrid<T>) -> Result<Self> {
        Self::new(grid, self.counts.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_is_sum() {
        let g = WavelengthGrid::uniform(0.0f64, 1.0, 3).unwrap();
        let s = BinnedSpectrum::new(g.clone(), vec![1, 0, 4]).unwrap();
        assert_eq!(s.total(), 5);
        assert!(BinnedSpectrum::new(g, vec![1, 2]).is_err());
    }
}
