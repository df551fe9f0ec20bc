//! Poissonian measurement simulation.
//!
//! A reference shape is normalized to sum one, so a resource budget `N` is
//! the expected number of photons reaching the detector without an object.
//! The signal arm multiplies that shape by the object's transmittance; the
//! absorbed fraction simply never arrives.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::real::Real;
use crate::rng::{stream_rng, Stream};
use crate::spectra::{
    make_flat_reference, make_gaussian_reference, BinnedSpectrum, SpectralDensity,
    TabulatedTransmission, TransmissionProfile, WavelengthGrid,
};

/// Reference budget of the Gaussian-reference scenario.
pub const BROAD_N_REFERENCE: u64 = 350_000;
/// Reference budget of the flat-reference scenario.
pub const NARROW_N_REFERENCE: u64 = 600_000;
pub const BROAD_REFERENCE_CENTER_NM: f64 = 805.0;
pub const BROAD_REFERENCE_WIDTH_NM: f64 = 4.0;
pub const MAX_BROAD_SLOPE: f64 = 0.02;
pub const NARROW_DIP_DEPTH: f64 = 0.2;
pub const MAX_NARROW_WIDTH_NM: f64 = 10.0;

/// Band-pass reference of the bench experiment.
pub const EXPERIMENT_REFERENCE_CENTER_NM: f64 = 810.0;
/// Not published; taken equal to the simulated Gaussian reference width.
pub const EXPERIMENT_REFERENCE_WIDTH_NM: f64 = 4.0;
pub const EXPERIMENT_N_REFERENCE: u64 = 350_000;
pub const FILTER_CENTER_NM: f64 = 807.0;
pub const FILTER_FWHM_NM: f64 = 7.5;
pub const FILTER_ORDER: f64 = 4.0;

/// Reference shape, spectral object, both resource budgets and a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Scenario<T: Real> {
    reference: SpectralDensity<T>,
    object: TransmissionProfile<T>,
    n_reference: u64,
    n_signal: u64,
    seed: u64,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        reference: SpectralDensity<T>,
        object: TransmissionProfile<T>,
        n_reference: u64,
        n_signal: u64,
        seed: u64,
    ) -> Result<Self> {
        if n_reference == 0 || n_signal == 0 {
            return Err(invalid("resource budgets must be >= 1"));
        }
        if let Some((lo, hi)) = object.domain() {
            let g = reference.grid();
            for l in [g.first(), g.last()] {
                if l < lo || l > hi {
                    return Err(Error::OutOfRange {
                        wavelength: l.as_f64(),
                        min: lo.as_f64(),
                        max: hi.as_f64(),
                    });
                }
            }
        }
        Ok(Self {
            reference,
            object,
            n_reference,
            n_signal,
            seed,
        })
    }

    pub fn reference(&self) -> &SpectralDensity<T> {
        &self.reference
    }

    pub fn object(&self) -> &TransmissionProfile<T> {
        &self.object
    }

    pub fn grid(&self) -> &WavelengthGrid<T> {
        self.reference.grid()
    }

    pub fn n_reference(&self) -> u64 {
        self.n_reference
    }

    pub fn n_signal(&self) -> u64 {
        self.n_signal
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_signal_resources(mut self, n_signal: u64) -> Result<Self> {
        if n_signal == 0 {
            return Err(invalid("resource budgets must be >= 1"));
        }
        self.n_signal = n_signal;
        Ok(self)
    }

    /// Transmittance of the object at every grid point.
    pub fn transmittance(&self) -> Result<Vec<T>> {
        self.grid()
            .centers()
            .iter()
            .map(|l| self.object.transmittance_at(*l))
            .collect()
    }

    /// Poisson means of the signal bins, `N_T * p_i * T_i`.
    pub fn expected_signal_counts(&self) -> Result<Vec<T>> {
        let n = T::from_count(self.n_signal);
        Ok(self
            .reference
            .normalized()
            .into_iter()
            .zip(self.transmittance()?)
            .map(|(p, t)| n * p * t)
            .collect())
    }

    /// Expected detected signal photons; at most `N_T`.
    pub fn expected_detected(&self) -> Result<T> {
        Ok(self.expected_signal_counts()?.into_iter().sum())
    }

    /// Fraction of signal resources surviving the object.
    pub fn detection_efficiency(&self) -> Result<T> {
        Ok(self.expected_detected()? / T::from_count(self.n_signal))
    }

    /// Signal budget whose expected detected total is `target`.
    pub fn signal_resources_for_detected(&self, target: u64) -> Result<u64> {
        let eff = self.detection_efficiency()?;
        if eff <= T::zero() {
            return Err(Error::InvalidDensity("object absorbs every photon".into()));
        }
        let n = (T::from_count(target) / eff).round().to_u64().unwrap_or(0);
        Ok(n.max(1))
    }

    /// The high-SNR reference measurement of this scenario.
    pub fn simulate_reference(&self) -> Result<BinnedSpectrum<T>> {
        self.sample_reference(Stream::Reference)
    }

    /// Fresh reference for trial `k` (per-trial reference mode).
    pub fn simulate_trial_reference(&self, k: u64) -> Result<BinnedSpectrum<T>> {
        self.sample_reference(Stream::TrialReference(k))
    }

    /// Signal measurement of trial `k`. Trial 0 is [`simulate_signal`].
    pub fn simulate_signal_trial(&self, k: u64) -> Result<BinnedSpectrum<T>> {
        let means = self.expected_signal_counts()?;
        let mut rng = stream_rng(self.seed, Stream::Signal(k));
        sample_means(self.grid(), &means, &mut rng)
    }

    fn sample_reference(&self, stream: Stream) -> Result<BinnedSpectrum<T>> {
        let mut rng = stream_rng(self.seed, stream);
        let n = T::from_count(self.n_reference);
        let means: Vec<T> = self
            .reference
            .normalized()
            .into_iter()
            .map(|p| n * p)
            .collect();
        sample_means(self.grid(), &means, &mut rng)
    }
}

fn sample_means<T: Real, R: Rng + ?Sized>(
    grid: &WavelengthGrid<T>,
    means: &[T],
    rng: &mut R,
) -> Result<BinnedSpectrum<T>> {
    let counts = means
        .iter()
        .map(|m| {
            let mean = m.as_f64();
            if mean == 0.0 {
                return Ok(0);
            }
            let dist =
                Poisson::new(mean).map_err(|e| invalid(format!("Poisson mean {mean}: {e}")))?;
            Ok(dist.sample(rng) as u64)
        })
        .collect::<Result<Vec<u64>>>()?;
    BinnedSpectrum::new(grid.clone(), counts)
}

/// Independent Poisson counts with means `n_resources * density_i / sum(density)`.
pub fn sample_poisson_counts<T: Real>(
    density: &SpectralDensity<T>,
    n_resources: u64,
    seed: u64,
) -> Result<BinnedSpectrum<T>> {
    if n_resources == 0 {
        return Err(invalid("resource budget must be >= 1"));
    }
    let n = T::from_count(n_resources);
    let means: Vec<T> = density.normalized().into_iter().map(|p| n * p).collect();
    let mut rng = stream_rng(seed, Stream::Reference);
    sample_means(density.grid(), &means, &mut rng)
}

pub fn simulate_signal<T: Real>(scenario: &Scenario<T>) -> Result<BinnedSpectrum<T>> {
    scenario.simulate_signal_trial(0)
}

/// Gaussian reference (805 nm, 4 nm) through a linear-slope absorber
/// anchored at the grid start.
pub fn broad_absorber_on<T: Real>(
    grid: &WavelengthGrid<T>,
    slope: T,
    n_signal: u64,
    seed: u64,
) -> Result<Scenario<T>> {
    if !(slope >= T::zero() && slope <= T::lit(MAX_BROAD_SLOPE)) {
        return Err(invalid(format!(
            "absorber slope must lie in [0, {MAX_BROAD_SLOPE}] 1/nm, got {slope}"
        )));
    }
    let reference = make_gaussian_reference(
        grid,
        T::lit(BROAD_REFERENCE_CENTER_NM),
        T::lit(BROAD_REFERENCE_WIDTH_NM),
    )?;
    let object = TransmissionProfile::linear_slope(slope, grid.first())?;
    Scenario::new(reference, object, BROAD_N_REFERENCE, n_signal, seed)
}

/// Flat reference with a depth-0.2 Gaussian dip at the grid midpoint.
pub fn narrow_dip_on<T: Real>(
    grid: &WavelengthGrid<T>,
    width_nm: T,
    n_signal: u64,
    seed: u64,
) -> Result<Scenario<T>> {
    if !(width_nm >= T::zero() && width_nm <= T::lit(MAX_NARROW_WIDTH_NM)) {
        return Err(invalid(format!(
            "dip width must lie in [0, {MAX_NARROW_WIDTH_NM}] nm, got {width_nm}"
        )));
    }
    let reference = make_flat_reference(grid);
    let object =
        TransmissionProfile::gaussian_dip(T::lit(NARROW_DIP_DEPTH), grid.midpoint(), width_nm)?;
    Scenario::new(reference, object, NARROW_N_REFERENCE, n_signal, seed)
}

fn experiment_reference<T: Real>(grid: &WavelengthGrid<T>) -> Result<SpectralDensity<T>> {
    make_gaussian_reference(
        grid,
        T::lit(EXPERIMENT_REFERENCE_CENTER_NM),
        T::lit(EXPERIMENT_REFERENCE_WIDTH_NM),
    )
}

/// 810 nm band-pass reference through a 4th-order super-Gaussian filter
/// (807 nm, FWHM 7.5 nm).
pub fn supergaussian_filter_on<T: Real>(
    grid: &WavelengthGrid<T>,
    n_signal: u64,
    seed: u64,
) -> Result<Scenario<T>> {
    let object = TransmissionProfile::super_gaussian(
        T::lit(FILTER_CENTER_NM),
        T::lit(FILTER_FWHM_NM),
        T::lit(FILTER_ORDER),
    )?;
    Scenario::new(
        experiment_reference(grid)?,
        object,
        EXPERIMENT_N_REFERENCE,
        n_signal,
        seed,
    )
}

/// 810 nm band-pass reference through a tabulated transmittance curve.
pub fn tabulated_on<T: Real>(
    grid: &WavelengthGrid<T>,
    table: TabulatedTransmission<T>,
    n_signal: u64,
    seed: u64,
) -> Result<Scenario<T>> {
    Scenario::new(
        experiment_reference(grid)?,
        TransmissionProfile::Tabulated(table),
        EXPERIMENT_N_REFERENCE,
        n_signal,
        seed,
    )
}

/// [`broad_absorber_on`] the default simulation grid.
pub fn scenario_broad_absorber<T: Real>(slope: T, n_signal: u64, seed: u64) -> Result<Scenario<T>> {
    broad_absorber_on(&WavelengthGrid::default_simulation(), slope, n_signal, seed)
}

/// [`narrow_dip_on`] the default simulation grid.
pub fn scenario_narrow_dip<T: Real>(width_nm: T, n_signal: u64, seed: u64) -> Result<Scenario<T>> {
    narrow_dip_on(
        &WavelengthGrid::default_simulation(),
        width_nm,
        n_signal,
        seed,
    )
}

pub fn scenario_supergaussian_filter<T: Real>(n_signal: u64, seed: u64) -> Result<Scenario<T>> {
    supergaussian_filter_on(&WavelengthGrid::default_simulation(), n_signal, seed)
}

pub fn scenario_tabulated<T: Real>(
    table: TabulatedTransmission<T>,
    n_signal: u64,
    seed: u64,
) -> Result<Scenario<T>> {
    tabulated_on(&WavelengthGrid::default_simulation(), table, n_signal, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_spectrum() {
        let g = WavelengthGrid::<f64>::default_simulation();
        let d = make_gaussian_reference(&g, 805.0, 4.0).unwrap();
        let a = sample_poisson_counts(&d, 350_000, 11).unwrap();
        let b = sample_poisson_counts(&d, 350_000, 11).unwrap();
        let c = sample_poisson_counts(&d, 350_000, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_resources_rejected() {
        let g = WavelengthGrid::<f64>::default_simulation();
        assert!(sample_poisson_counts(&make_flat_reference(&g), 0, 1).is_err());
        assert!(scenario_broad_absorber(0.0f64, 0, 1).is_err());
    }

    #[test]
    fn broad_constructor_bounds() {
        assert!(scenario_broad_absorber(-0.001f64, 300, 1).is_err());
        assert!(scenario_broad_absorber(0.021f64, 300, 1).is_err());
        for nt in [300, 1000, 3000, 10_000, 30_000] {
            let s = scenario_broad_absorber(0.016f64, nt, 1).unwrap();
            assert_eq!(s.n_reference(), 350_000);
            assert_eq!(s.n_signal(), nt);
        }
    }

    #[test]
    fn broad_zero_slope_is_transparent() {
        let s = scenario_broad_absorber(0.0f64, 300, 1).unwrap();
        assert!(s.transmittance().unwrap().iter().all(|&t| t == 1.0));
    }

    #[test]
    fn broad_strong_slope_span() {
        let s = scenario_broad_absorber(0.016f64, 300, 1).unwrap();
        let t = s.transmittance().unwrap();
        assert_eq!(t[0], 1.0);
        assert!((t[t.len() - 1] - (1.0 - 0.016 * 29.75)).abs() < 1e-12);
        assert!((t[t.len() - 1] - 0.52).abs() < 0.01);
    }

    #[test]
    fn narrow_constructor() {
        assert!(scenario_narrow_dip(-1.0f64, 300, 1).is_err());
        assert!(scenario_narrow_dip(10.5f64, 300, 1).is_err());
        let null = scenario_narrow_dip(0.0f64, 300, 1).unwrap();
        assert!(null.transmittance().unwrap().iter().all(|&t| t == 1.0));
        for sigma in [1.0f64, 1.5, 2.0, 6.0] {
            let s = scenario_narrow_dip(sigma, 300, 1).unwrap();
            assert_eq!(s.n_reference(), 600_000);
            let center = s.grid().midpoint();
            assert!((s.object().transmittance_at(center).unwrap() - 0.8).abs() < 1e-15);
        }
    }

    #[test]
    fn tabulated_must_cover_grid() {
        let short = TabulatedTransmission::new(vec![795.0f64, 815.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            scenario_tabulated(short, 100, 1),
            Err(Error::OutOfRange { .. })
        ));
        let flat = TabulatedTransmission::new(vec![780.0f64, 830.0], vec![1.0, 1.0]).unwrap();
        let s = scenario_tabulated(flat, 1000, 3).unwrap();
        assert!(s.transmittance().unwrap().iter().all(|&t| t == 1.0));
    }

    #[test]
    fn expected_detected_bounded_by_budget() {
        let s = scenario_broad_absorber(0.016f64, 10_000, 1).unwrap();
        let e = s.expected_detected().unwrap();
        assert!(e < 10_000.0);
        let id = scenario_broad_absorber(0.0f64, 10_000, 1).unwrap();
        assert!((id.expected_detected().unwrap() - 10_000.0).abs() < 1e-6);
    }

    #[test]
    fn resources_for_detected_target() {
        let s = scenario_supergaussian_filter::<f64>(1, 1).unwrap();
        let n = s.signal_resources_for_detected(228).unwrap();
        let s = s.with_signal_resources(n).unwrap();
        assert!((s.expected_detected().unwrap() - 228.0).abs() < 1.0);
    }

    #[test]
    fn works_in_single_precision() {
        let s = scenario_narrow_dip(6.0f32, 15_000, 5).unwrap();
        let sig = s.simulate_signal_trial(0).unwrap();
        assert!(sig.total() > 12_000 && sig.total() < 15_000);
    }
}
