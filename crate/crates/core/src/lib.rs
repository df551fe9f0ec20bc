//! Ghost-spectrometry threat discrimination.
//!
//! Simulates Poisson photon-counting spectra of a reference arm and of a
//! signal arm that passes through a (possibly absent) absorbing object, and
//! decides whether an object is present with a binned two-sample
//! Kolmogorov-Smirnov test. Monte Carlo sweeps over absorber strength and
//! signal budget produce rejection rates and p-value box statistics.
//!
//! All numerical types are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the CLI uses.

// `!(x > 0)` style checks are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod ks;
pub mod mc;
mod real;
pub mod rng;
pub mod sim;
pub mod spectra;

pub use error::{Error, Result};
pub use ks::{decide, kolmogorov_sf, ks_statistic, ks_test, two_sample_test, KsOutcome, TestMode};
pub use mc::{
    permutation_oracle, pvalue_stats, rejection_rate, run_batch, run_trials, sweep, ReferenceMode,
    ScenarioFamily, SweepFamily, SweepOptions, SweepResult, TrialBatch, TrialOptions,
};
pub use real::Real;
pub use sim::{sample_poisson_counts, simulate_signal, Scenario};
pub use spectra::{
    apply_transmission, empirical_cdf, integrate_roi, make_flat_reference, make_gaussian_reference,
    transmittance_at, BinnedSpectrum, CountImage, EmpiricalCdf, SpectralDensity,
    TabulatedTransmission, TransmissionProfile, WavelengthGrid,
};

pub type Grid = WavelengthGrid<f64>;
pub type Spectrum = BinnedSpectrum<f64>;
pub type Density = SpectralDensity<f64>;
pub type Transmission = TransmissionProfile<f64>;
pub type Cdf = EmpiricalCdf<f64>;
pub type Outcome = KsOutcome<f64>;
pub type Setup = Scenario<f64>;
pub type Batch = TrialBatch<f64>;
pub type Sweep = SweepResult<f64>;

pub type Grid32 = WavelengthGrid<f32>;
pub type Spectrum32 = BinnedSpectrum<f32>;
pub type Setup32 = Scenario<f32>;
