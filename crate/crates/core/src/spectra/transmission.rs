use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::real::Real;

/// Transmittance sampled at increasing wavelengths, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TabulatedTransmission<T: Real> {
    wavelengths: Vec<T>,
    transmittance: Vec<T>,
}

impl<T: Real> TabulatedTransmission<T> {
    pub fn new(wavelengths: Vec<T>, transmittance: Vec<T>) -> Result<Self> {
        if wavelengths.len() != transmittance.len() {
            return Err(invalid(format!(
                "table has {} wavelengths but {} transmittance values",
                wavelengths.len(),
                transmittance.len()
            )));
        }
        if wavelengths.len() < 2 {
            return Err(invalid("table needs at least 2 rows"));
        }
        if wavelengths.iter().any(|w| !w.is_finite())
            || wavelengths.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(invalid(
                "table wavelengths must be finite and strictly increasing",
            ));
        }
        if let Some(t) = transmittance
            .iter()
            .find(|t| !(**t >= T::zero() && **t <= T::one()))
        {
            return Err(invalid(format!(
                "tabulated transmittance {t} outside [0, 1]"
            )));
        }
        Ok(Self {
            wavelengths,
            transmittance,
        })
    }

    /// Builds the table from decadic absorbance, `T = 10^(-A)`.
    pub fn from_absorbance(wavelengths: Vec<T>, absorbance: &[T]) -> Result<Self> {
        if absorbance.iter().any(|a| !(*a >= T::zero())) {
            return Err(invalid("absorbance must be non-negative"));
        }
        let ten = T::lit(10.0);
        let t = absorbance.iter().map(|a| ten.powf(-*a)).collect();
        Self::new(wavelengths, t)
    }

    pub fn wavelengths(&self) -> &[T] {
        &self.wavelengths
    }

    pub fn transmittance(&self) -> &[T] {
        &self.transmittance
    }

    pub fn range(&self) -> (T, T) {
        (
            self.wavelengths[0],
            self.wavelengths[self.wavelengths.len() - 1],
        )
    }

    fn at(&self, lambda: T) -> Result<T> {
        let (lo, hi) = self.range();
        if !(lambda >= lo && lambda <= hi) {
            return Err(Error::OutOfRange {
                wavelength: lambda.as_f64(),
                min: lo.as_f64(),
                max: hi.as_f64(),
            });
        }
        // index of the first knot strictly above lambda, clamped to the last segment
        let upper = self
            .wavelengths
            .partition_point(|w| *w <= lambda)
            .clamp(1, self.wavelengths.len() - 1);
        let (x0, x1) = (self.wavelengths[upper - 1], self.wavelengths[upper]);
        let (y0, y1) = (self.transmittance[upper - 1], self.transmittance[upper]);
        let frac = (lambda - x0) / (x1 - x0);
        Ok(y0 + (y1 - y0) * frac)
    }
}

/// Model of a spectral object: wavelength to transmittance in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransmissionProfile<T: Real> {
    /// `clamp(1 - slope * (λ - reference_nm), 0, 1)`, slope in 1/nm.
    LinearSlope {
        slope: T,
        reference_nm: T,
    },
    /// `1 - depth * exp(-(λ - center)^2 / (2 width^2))`; zero width means no dip.
    GaussianDip {
        depth: T,
        center_nm: T,
        width_nm: T,
    },
    /// Flat-topped band pass `exp(-ln2 * (4 (λ - center)^2 / fwhm^2)^order)`.
    SuperGaussian {
        center_nm: T,
        fwhm_nm: T,
        order: T,
    },
    Tabulated(TabulatedTransmission<T>),
    Identity,
}

impl<T: Real> TransmissionProfile<T> {
    pub fn linear_slope(slope: T, reference_nm: T) -> Result<Self> {
        if !slope.is_finite() || !reference_nm.is_finite() {
            return Err(invalid("linear slope parameters must be finite"));
        }
        Ok(Self::LinearSlope {
            slope,
            reference_nm,
        })
    }

    pub fn gaussian_dip(depth: T, center_nm: T, width_nm: T) -> Result<Self> {
        if !(depth >= T::zero() && depth <= T::one()) {
            return Err(invalid(format!(
                "dip depth must lie in [0, 1], got {depth}"
            )));
        }
        if !(width_nm >= T::zero()) || !width_nm.is_finite() {
            return Err(invalid(format!("dip width must be >= 0, got {width_nm}")));
        }
        if !center_nm.is_finite() {
            return Err(invalid("dip center must be finite"));
        }
        Ok(Self::GaussianDip {
            depth,
            center_nm,
            width_nm,
        })
    }

    pub fn super_gaussian(center_nm: T, fwhm_nm: T, order: T) -> Result<Self> {
        if !(fwhm_nm > T::zero()) || !fwhm_nm.is_finite() {
            return Err(invalid(format!("FWHM must be positive, got {fwhm_nm}")));
        }
        if !(order > T::zero()) || !order.is_finite() {
            return Err(invalid(format!(
                "super-Gaussian order must be positive, got {order}"
            )));
        }
        if !center_nm.is_finite() {
            return Err(invalid("filter center must be finite"));
        }
        Ok(Self::SuperGaussian {
            center_nm,
            fwhm_nm,
            order,
        })
    }

    /// Wavelength range outside which evaluation fails, if any.
    pub fn domain(&self) -> Option<(T, T)> {
        match self {
            Self::Tabulated(t) => Some(t.range()),
            _ => None,
        }
    }

    pub fn transmittance_at(&self, lambda: T) -> Result<T> {
        if !lambda.is_finite() {
            return Err(invalid("wavelength must be finite"));
        }
        let t = match self {
            Self::Identity => T::one(),
            Self::LinearSlope {
                slope,
                reference_nm,
            } => (T::one() - *slope * (lambda - *reference_nm))
                .max(T::zero())
                .min(T::one()),
            Self::GaussianDip {
                depth,
                center_nm,
                width_nm,
            } => {
                if *width_nm == T::zero() {
                    T::one()
                } else {
                    let z = (lambda - *center_nm) / *width_nm;
                    T::one() - *depth * (-(z * z) / T::lit(2.0)).exp()
                }
            }
            Self::SuperGaussian {
                center_nm,
                fwhm_nm,
                order,
            } => {
                let d = lambda - *center_nm;
                let u = T::lit(4.0) * d * d / (*fwhm_nm * *fwhm_nm);
                (-T::lit(std::f64::consts::LN_2) * u.powf(*order)).exp()
            }
            Self::Tabulated(table) => table.at(lambda)?,
        };
        Ok(t.max(T::zero()).min(T::one()))
    }
}

/// Free-function form of [`TransmissionProfile::transmittance_at`].
pub fn transmittance_at<T: Real>(profile: &TransmissionProfile<T>, lambda: T) -> Result<T> {
    profile.transmittance_at(lambda)
}
