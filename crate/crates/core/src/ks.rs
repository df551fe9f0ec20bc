//! Binned two-sample Kolmogorov-Smirnov test.
//!
//! The statistic is the largest gap between the two cumulative count
//! distributions evaluated at the bin edges. Because both CDFs carry their
//! integer partial sums, the gap is formed exactly as
//! `max |C_s(i) * N_r - C_r(i) * N_s| / (N_s * N_r)` and only the final
//! division rounds.
//!
//! p-values come from the asymptotic Kolmogorov distribution evaluated at
//! `sqrt(n_eff) * D`. On heavily tied binned data that approximation is
//! conservative.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::real::Real;
use crate::spectra::{empirical_cdf, BinnedSpectrum, EmpiricalCdf};

/// Significance levels used when none are given.
pub const DEFAULT_LEVELS: [f64; 2] = [0.05, 0.01];

/// How the sample sizes enter the asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMode {
    /// `n_eff = n_s * n_r / (n_s + n_r)`.
    #[default]
    TwoSample,
    /// Reference treated as the exact distribution, `n_eff = n_s`.
    OneSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LevelDecision<T: Real> {
    pub significance: T,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KsOutcome<T: Real> {
    pub statistic: T,
    pub n_signal: u64,
    pub n_reference: u64,
    pub effective_n: T,
    pub p_value: T,
    pub reject_at_005: bool,
    pub reject_at_001: bool,
    pub decisions: Vec<LevelDecision<T>>,
}

impl<T: Real> KsOutcome<T> {
    /// Null rejected (object present) at `significance`.
    pub fn rejects(&self, significance: T) -> bool {
        decide(self, significance)
    }
}

/// Exact numerator of the KS gap: `max_i |cs_i * tr - cr_i * ts|`.
pub(crate) fn gap_numerator(cs: &[u64], ts: u64, cr: &[u64], tr: u64) -> u128 {
    let (ts, tr) = (ts as u128, tr as u128);
    cs.iter()
        .zip(cr)
        .map(|(&a, &b)| (a as u128 * tr).abs_diff(b as u128 * ts))
        .max()
        .unwrap_or(0)
}

pub(crate) fn gap_to_statistic<T: Real>(numerator: u128, ts: u64, tr: u64) -> T {
    if numerator == 0 {
        return T::zero();
    }
    let den = ts as u128 * tr as u128;
    if numerator == den {
        return T::one();
    }
    T::from_u128(numerator).unwrap() / T::from_u128(den).unwrap()
}

/// `max |F_s - F_r|` over all bins.
pub fn ks_statistic<T: Real>(signal: &EmpiricalCdf<T>, reference: &EmpiricalCdf<T>) -> Result<T> {
    signal.grid().ensure_same(reference.grid())?;
    let num = gap_numerator(
        signal.cumulative_counts(),
        signal.total(),
        reference.cumulative_counts(),
        reference.total(),
    );
    Ok(gap_to_statistic(num, signal.total(), reference.total()))
}

// Below this argument the Jacobi-transformed series converges faster.
const SERIES_CUTOVER: f64 = 1.0;

/// Survival function of the Kolmogorov distribution,
/// `Q(x) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)`.
///
/// For `x < 1` the equivalent form
/// `1 - sqrt(2 pi)/x * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2))` is summed
/// instead. Both series stop once a term falls below machine epsilon
/// relative to the running sum.
pub fn kolmogorov_sf<T: Real>(x: T) -> Result<T> {
    if x.is_nan() || x < T::zero() {
        return Err(invalid(format!(
            "Kolmogorov argument must be >= 0, got {x}"
        )));
    }
    if x == T::zero() {
        return Ok(T::one());
    }
    if x.is_infinite() {
        return Ok(T::zero());
    }
    let eps = T::epsilon();
    let q = if x < T::lit(SERIES_CUTOVER) {
        let pi = T::lit(std::f64::consts::PI);
        let a = -(pi * pi) / (T::lit(8.0) * x * x);
        let mut sum = T::zero();
        let mut k = 1u32;
        loop {
            let odd = T::from_u32(2 * k - 1).unwrap();
            let term = (a * odd * odd).exp();
            sum += term;
            if term <= eps * sum || term == T::zero() {
                break;
            }
            k += 1;
        }
        T::one() - T::lit((2.0 * std::f64::consts::PI).sqrt()) / x * sum
    } else {
        let a = -T::lit(2.0) * x * x;
        let mut sum = T::zero();
        let mut sign = T::one();
        let mut k = 1u32;
        loop {
            let kk = T::from_u32(k * k).unwrap();
            let term = (a * kk).exp();
            sum += sign * term;
            if term <= eps * sum.abs() {
                break;
            }
            sign = -sign;
            k += 1;
        }
        T::lit(2.0) * sum
    };
    Ok(q.max(T::zero()).min(T::one()))
}

/// True (object present) iff `p_value < significance`.
pub fn decide<T: Real>(outcome: &KsOutcome<T>, significance: T) -> bool {
    outcome.p_value < significance
}

fn validate_levels<T: Real>(levels: &[T]) -> Result<()> {
    match levels.iter().find(|l| !(**l > T::zero() && **l < T::one())) {
        Some(l) => Err(invalid(format!("significance level {l} outside (0, 1)"))),
        None => Ok(()),
    }
}

/// Two-sample asymptotic KS test of `signal` against `reference`.
pub fn two_sample_test<T: Real>(
    signal: &BinnedSpectrum<T>,
    reference: &BinnedSpectrum<T>,
    significance_levels: &[T],
) -> Result<KsOutcome<T>> {
    ks_test(signal, reference, significance_levels, TestMode::TwoSample)
}

pub fn ks_test<T: Real>(
    signal: &BinnedSpectrum<T>,
    reference: &BinnedSpectrum<T>,
    significance_levels: &[T],
    mode: TestMode,
) -> Result<KsOutcome<T>> {
    validate_levels(significance_levels)?;
    signal.grid().ensure_same(reference.grid())?;
    if signal.total() == 0 || reference.total() == 0 {
        return Err(Error::EmptyMeasurement);
    }
    let fs = empirical_cdf(signal)?;
    let fr = empirical_cdf(reference)?;
    let statistic = ks_statistic(&fs, &fr)?;
    Ok(outcome_from(
        statistic,
        signal.total(),
        reference.total(),
        significance_levels,
        mode,
    ))
}

pub(crate) fn effective_n<T: Real>(n_signal: u64, n_reference: u64, mode: TestMode) -> T {
    let n = T::from_count(n_signal);
    match mode {
        TestMode::TwoSample => {
            let m = T::from_count(n_reference);
            n * m / (n + m)
        }
        TestMode::OneSample => n,
    }
}

pub(crate) fn outcome_from<T: Real>(
    statistic: T,
    n_signal: u64,
    n_reference: u64,
    levels: &[T],
    mode: TestMode,
) -> KsOutcome<T> {
    let effective_n = effective_n::<T>(n_signal, n_reference, mode);
    let p_value = kolmogorov_sf(effective_n.sqrt() * statistic).expect("non-negative KS argument");
    KsOutcome {
        statistic,
        n_signal,
        n_reference,
        effective_n,
        p_value,
        reject_at_005: p_value < T::lit(0.05),
        reject_at_001: p_value < T::lit(0.01),
        decisions: levels
            .iter()
            .map(|&significance| LevelDecision {
                significance,
                reject: p_value < significance,
            })
            .collect(),
    }
}
