use serde::{Deserialize, Serialize};

use super::{TransmissionProfile, WavelengthGrid};
use crate::error::{Error, Result};
use crate::real::Real;

/// Non-negative expected relative intensity per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpectralDensity<T: Real> {
    grid: WavelengthGrid<T>,
    intensity: Vec<T>,
}

impl<T: Real> SpectralDensity<T> {
    pub fn new(grid: WavelengthGrid<T>, intensity: Vec<T>) -> Result<Self> {
        if intensity.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} intensities for a {}-bin grid",
                intensity.len(),
                grid.len()
            )));
        }
        if let Some(i) = intensity
            .iter()
            .position(|v| !(*v >= T::zero()) || !v.is_finite())
        {
            return Err(Error::InvalidDensity(format!(
                "intensity at bin {i} is negative or non-finite"
            )));
        }
        if intensity.iter().all(|v| *v == T::zero()) {
            return Err(Error::InvalidDensity("all intensities are zero".into()));
        }
        Ok(Self { grid, intensity })
    }

    pub fn grid(&self) -> &WavelengthGrid<T> {
        &self.grid
    }

    pub fn intensity(&self) -> &[T] {
        &self.intensity
    }

    pub fn sum(&self) -> T {
        self.intensity.iter().copied().sum()
    }

    /// Intensities scaled to sum to one.
    pub fn normalized(&self) -> Vec<T> {
        let s = self.sum();
        self.intensity.iter().map(|v| *v / s).collect()
    }
}

/// Gaussian band `exp(-(λ - center)^2 / (2 width^2))`, peak value 1.
pub fn make_gaussian_reference<T: Real>(
    grid: &WavelengthGrid<T>,
    center_nm: T,
    width_nm: T,
) -> Result<SpectralDensity<T>> {
    if !(width_nm > T::zero()) || !width_nm.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "reference width must be positive, got {width_nm}"
        )));
    }
    if !center_nm.is_finite() {
        return Err(Error::InvalidParameter(
            "reference center must be finite".into(),
        ));
    }
    let two = T::lit(2.0);
    let intensity = grid
        .centers()
        .iter()
        .map(|l| {
            let z = (*l - center_nm) / width_nm;
            (-(z * z) / two).exp()
        })
        .collect();
    SpectralDensity::new(grid.clone(), intensity)
}

pub fn make_flat_reference<T: Real>(grid: &WavelengthGrid<T>) -> SpectralDensity<T> {
    SpectralDensity {
        grid: grid.clone(),
        intensity: vec![T::one(); grid.len()],
    }
}

/// Multiplies each bin by the object's transmittance at the bin center.
pub fn apply_transmission<T: Real>(
    density: &SpectralDensity<T>,
    profile: &TransmissionProfile<T>,
) -> Result<SpectralDensity<T>> {
    let intensity = density
        .grid
        .centers()
        .iter()
        .zip(&density.intensity)
        .map(|(l, v)| Ok(*v * profile.transmittance_at(*l)?))
        .collect::<Result<Vec<T>>>()?;
    SpectralDensity::new(density.grid.clone(), intensity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> WavelengthGrid<f64> {
        WavelengthGrid::default_simulation()
    }

    #[test]
    fn gaussian_peaks_at_center() {
        let d = make_gaussian_reference(&grid(), 805.0, 4.0).unwrap();
        let i805 = grid().centers().iter().position(|&l| l == 805.0).unwrap();
        assert_eq!(d.intensity()[i805], 1.0);
        let argmax = d
            .intensity()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, i805);
        let i801 = grid().centers().iter().position(|&l| l == 801.0).unwrap();
        let i809 = grid().centers().iter().position(|&l| l == 809.0).unwrap();
        let e = (-0.5f64).exp();
        assert!((d.intensity()[i801] - e).abs() < 1e-12);
        assert!((d.intensity()[i809] - e).abs() < 1e-12);
    }

    #[test]
    fn gaussian_rejects_bad_width() {
        assert!(make_gaussian_reference(&grid(), 805.0, 0.0).is_err());
        assert!(make_gaussian_reference(&grid(), 805.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_symmetric_on_symmetric_grid() {
        let g = WavelengthGrid::uniform(795.0f64, 0.5, 41).unwrap();
        let d = make_gaussian_reference(&g, 805.0, 3.0).unwrap();
        let v = d.intensity();
        for i in 0..v.len() {
            assert!((v[i] - v[v.len() - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn flat_reference_is_ones() {
        let g = WavelengthGrid::uniform(0.0f64, 1.0, 100).unwrap();
        let d = make_flat_reference(&g);
        assert_eq!(d.intensity().len(), 100);
        assert!(d.intensity().iter().all(|&v| v == 1.0));
        let same = apply_transmission(&d, &TransmissionProfile::Identity).unwrap();
        assert_eq!(same, d);
    }

    #[test]
    fn narrow_full_dip_zeroes_one_bin() {
        let d = make_flat_reference(&grid());
        let p = TransmissionProfile::gaussian_dip(1.0, 805.0, 0.01).unwrap();
        let out = apply_transmission(&d, &p).unwrap();
        let i = grid().centers().iter().position(|&l| l == 805.0).unwrap();
        assert!(out.intensity()[i] < 1e-12);
        assert!(out.intensity()[i - 1] > 0.999);
        assert!(out.intensity()[i + 1] > 0.999);
    }

    #[test]
    fn slope_over_thirty_nm() {
        let g = WavelengthGrid::uniform(790.0f64, 0.25, 121).unwrap();
        let d = make_flat_reference(&g);
        let p = TransmissionProfile::linear_slope(0.004, g.first()).unwrap();
        let out = apply_transmission(&d, &p).unwrap();
        let v = out.intensity();
        assert!((v[120] / v[0] - 0.88).abs() < 1e-12);
    }

    #[test]
    fn total_absorption_is_an_error() {
        let d = make_flat_reference(&grid());
        let p = TransmissionProfile::linear_slope(1.0, 700.0).unwrap();
        assert!(matches!(
            apply_transmission(&d, &p),
            Err(Error::InvalidDensity(_))
        ));
    }

    proptest! {
        #[test]
        fn transmission_never_increases_intensity(
            center in 790.0f64..820.0,
            width in 0.5f64..10.0,
            depth in 0.0f64..0.99,
            slope in 0.0f64..0.02,
        ) {
            let d = make_gaussian_reference(&grid(), center, width).unwrap();
            for p in [
                TransmissionProfile::gaussian_dip(depth, center, width).unwrap(),
                TransmissionProfile::linear_slope(slope, 790.0).unwrap(),
            ] {
                let out = apply_transmission(&d, &p).unwrap();
                for (a, b) in out.intensity().iter().zip(d.intensity()) {
                    prop_assert!(a <= b);
                }
            }
        }
    }
}
