use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Ordered wavelength bin centers (nm) defining the spectral axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
pub struct WavelengthGrid<T: Real> {
    centers: Vec<T>,
}

impl<T: Real> WavelengthGrid<T> {
    pub fn new(centers: Vec<T>) -> Result<Self> {
        if centers.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 bins, got {}",
                centers.len()
            )));
        }
        if let Some(i) = centers.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite wavelength at bin {i}"
            )));
        }
        if let Some(i) = centers.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "wavelengths not strictly increasing at bin {}",
                i + 1
            )));
        }
        Ok(Self { centers })
    }

    /// `bins` centers starting at `start`, spaced by `step`.
    pub fn uniform(start: T, step: T, bins: usize) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        let centers = (0..bins)
            .map(|i| start + step * T::from_usize(i).unwrap())
            .collect();
        Self::new(centers)
    }

    /// The default simulation window: 790 to 819.75 nm in 120 bins of 0.25 nm.
    pub fn default_simulation() -> Self {
        Self::uniform(T::lit(790.0), T::lit(0.25), 120).expect("default grid is valid")
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[T] {
        &self.centers
    }

    pub fn first(&self) -> T {
        self.centers[0]
    }

    pub fn last(&self) -> T {
        self.centers[self.centers.len() - 1]
    }

    /// Midpoint of the covered wavelength range.
    pub fn midpoint(&self) -> T {
        (self.first() + self.last()) / T::lit(2.0)
    }

    /// Mean bin spacing.
    pub fn mean_spacing(&self) -> T {
        (self.last() - self.first()) / T::from_usize(self.len() - 1).unwrap()
    }

    /// True when every spacing matches the mean spacing to a relative 1e-6.
    pub fn is_uniform(&self) -> bool {
        let mean = self.mean_spacing();
        let tol = mean * T::lit(1e-6);
        self.centers
            .windows(2)
            .all(|w| ((w[1] - w[0]) - mean).abs() <= tol)
    }

    pub(crate) fn ensure_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{} bins [{}, {}] vs {} bins [{}, {}]",
                self.len(),
                self.first(),
                self.last(),
                other.len(),
                other.first(),
                other.last()
            )))
        }
    }
}

impl<T: Real> TryFrom<Vec<T>> for WavelengthGrid<T> {
    type Error = Error;

    fn try_from(v: Vec<T>) -> Result<Self> {
        Self::new(v)
    }
}

impl<T: Real> From<WavelengthGrid<T>> for Vec<T> {
    fn from(g: WavelengthGrid<T>) -> Self {
        g.centers
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_unordered() {
        assert!(WavelengthGrid::new(vec![1.0f64]).is_err());
        assert!(WavelengthGrid::new(vec![1.0f64, 1.0]).is_err());
        assert!(WavelengthGrid::new(vec![2.0f64, 1.0]).is_err());
        assert!(WavelengthGrid::new(vec![1.0f64, f64::NAN]).is_err());
        assert!(WavelengthGrid::uniform(0.0f64, 0.0, 4).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = WavelengthGrid::<f64>::default_simulation();
        assert_eq!(g.len(), 120);
        assert_eq!(g.first(), 790.0);
        assert_eq!(g.last(), 819.75);
        assert!(g.is_uniform());
    }

    #[test]
    fn flags_non_uniform() {
        let g = WavelengthGrid::new(vec![1.0f64, 2.0, 4.0]).unwrap();
        assert!(!g.is_uniform());
    }
}
