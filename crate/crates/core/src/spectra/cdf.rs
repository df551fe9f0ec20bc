use super::{BinnedSpectrum, WavelengthGrid};
use crate::error::{Error, Result};
use crate::real::Real;

/// Cumulative distribution of a binned spectrum evaluated at the bin edges.
///
/// Keeps the integer partial sums alongside the real values so that KS gaps
/// can be formed without rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf<T: Real> {
    grid: WavelengthGrid<T>,
    cumulative: Vec<u64>,
    total: u64,
    values: Vec<T>,
}

impl<T: Real> EmpiricalCdf<T> {
    pub fn grid(&self) -> &WavelengthGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn cumulative_counts(&self) -> &[u64] {
        &self.cumulative
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

pub fn empirical_cdf<T: Real>(spectrum: &BinnedSpectrum<T>) -> Result<EmpiricalCdf<T>> {
    let total = spectrum.total();
    if total == 0 {
        return Err(Error::EmptyMeasurement);
    }
    let cumulative: Vec<u64> = spectrum
        .counts()
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    let denom = T::from_count(total);
    let values = cumulative
        .iter()
        .map(|&c| T::from_count(c) / denom)
        .collect();
    Ok(EmpiricalCdf {
        grid: spectrum.grid().clone(),
        cumulative,
        total,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spectrum(counts: Vec<u64>) -> BinnedSpectrum<f64> {
        let g = WavelengthGrid::uniform(0.0, 1.0, counts.len()).unwrap();
        BinnedSpectrum::new(g, counts).unwrap()
    }

    #[test]
    fn uniform_counts() {
        let c = empirical_cdf(&spectrum(vec![1, 1, 1, 1])).unwrap();
        assert_eq!(c.values(), &[0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn single_bin_mass() {
        let c = empirical_cdf(&spectrum(vec![0, 0, 5, 0])).unwrap();
        assert_eq!(c.values(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(
            empirical_cdf(&spectrum(vec![0, 0, 0])),
            Err(Error::EmptyMeasurement)
        ));
    }

    proptest! {
        #[test]
        fn nondecreasing_and_ends_at_one(
            counts in proptest::collection::vec(0u64..1_000_000, 2..200)
                .prop_filter("non-empty", |v| v.iter().any(|&c| c > 0))
        ) {
            let c = empirical_cdf(&spectrum(counts)).unwrap();
            prop_assert!(c.values().windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*c.values().last().unwrap(), 1.0);
        }
    }
}
