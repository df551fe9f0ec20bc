//! Shared data model: wavelength grids, binned count spectra, spectral
//! densities, transmission profiles and empirical cumulative distributions.

mod cdf;
mod density;
mod grid;
mod roi;
mod spectrum;
mod transmission;

pub use cdf::{empirical_cdf, EmpiricalCdf};
pub use density::{
    apply_transmission, make_flat_reference, make_gaussian_reference, SpectralDensity,
};
pub use grid::WavelengthGrid;
pub use roi::{integrate_roi, CountImage};
pub use spectrum::BinnedSpectrum;
pub use transmission::{transmittance_at, TabulatedTransmission, TransmissionProfile};
