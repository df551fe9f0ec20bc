//! Monte Carlo driver: repeated trials per parameter cell, rejection rates,
//! p-value box statistics, 2D sweeps and a permutation calibration oracle.
//!
//! Every trial draws from its own pre-assigned RNG substream and results are
//! collected in trial order, so output does not depend on thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ks::{gap_numerator, ks_test, TestMode, DEFAULT_LEVELS};
use crate::real::Real;
use crate::rng::{derive_seed, stream_rng, Stream, RNG_NAME};
use crate::sim::{broad_absorber_on, narrow_dip_on, Scenario};
use crate::spectra::{BinnedSpectrum, WavelengthGrid};

/// Default number of simulated profiles per cell.
pub const DEFAULT_TRIALS: usize = 100;

/// Scenario families that can be swept along one parameter axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepFamily {
    /// Gaussian reference, linear-slope absorber; axis is the slope (1/nm).
    Broad,
    /// Flat reference, depth-0.2 Gaussian dip; axis is the dip width (nm).
    Narrow,
}

impl SweepFamily {
    pub fn name(self) -> &'static str {
        match self {
            SweepFamily::Broad => "broad",
            SweepFamily::Narrow => "narrow",
        }
    }

    pub fn axis_name(self) -> &'static str {
        match self {
            SweepFamily::Broad => "alpha_per_nm",
            SweepFamily::Narrow => "sigma_nm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "broad" => Some(SweepFamily::Broad),
            "narrow" => Some(SweepFamily::Narrow),
            _ => None,
        }
    }
}

/// A sweep family bound to a wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFamily<T: Real> {
    pub kind: SweepFamily,
    pub grid: WavelengthGrid<T>,
}

impl<T: Real> ScenarioFamily<T> {
    pub fn new(kind: SweepFamily, grid: WavelengthGrid<T>) -> Self {
        Self { kind, grid }
    }

    pub fn on_default_grid(kind: SweepFamily) -> Self {
        Self::new(kind, WavelengthGrid::default_simulation())
    }

    pub fn build(&self, axis_value: T, n_signal: u64, seed: u64) -> Result<Scenario<T>> {
        match self.kind {
            SweepFamily::Broad => broad_absorber_on(&self.grid, axis_value, n_signal, seed),
            SweepFamily::Narrow => narrow_dip_on(&self.grid, axis_value, n_signal, seed),
        }
    }
}

/// Whether trials share one sampled reference or draw their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    #[default]
    Shared,
    PerTrial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOptions<T: Real> {
    pub levels: Vec<T>,
    pub mode: TestMode,
    pub reference: ReferenceMode,
}

impl<T: Real> Default for TrialOptions<T> {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS.iter().map(|&l| T::lit(l)).collect(),
            mode: TestMode::default(),
            reference: ReferenceMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BatchDescriptor<T: Real> {
    pub label: String,
    pub axis_value: Option<T>,
    pub n_signal: u64,
    pub n_reference: u64,
    pub seed: u64,
    pub rng: String,
}

/// Outcomes of `n_trials` independent signal draws against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrialBatch<T: Real> {
    pub descriptor: BatchDescriptor<T>,
    pub p_values: Vec<T>,
    pub statistics: Vec<T>,
    pub realized_totals: Vec<u64>,
    pub reference_totals: Vec<u64>,
}

impl<T: Real> TrialBatch<T> {
    pub fn n_trials(&self) -> usize {
        self.p_values.len()
    }

    pub fn mean_detected(&self) -> T {
        let s: u64 = self.realized_totals.iter().sum();
        T::from_count(s) / T::from_usize(self.n_trials()).unwrap()
    }
}

/// Runs `n_trials` signal simulations of `scenario` and tests each one.
///
/// In [`ReferenceMode::Shared`] one reference is sampled from the scenario's
/// reference budget and reused for every trial.
pub fn run_batch<T: Real>(
    scenario: &Scenario<T>,
    label: &str,
    axis_value: Option<T>,
    n_trials: usize,
    options: &TrialOptions<T>,
) -> Result<TrialBatch<T>> {
    if n_trials == 0 {
        return Err(invalid("n_trials must be >= 1"));
    }
    let shared = match options.reference {
        ReferenceMode::Shared => Some(scenario.simulate_reference()?),
        ReferenceMode::PerTrial => None,
    };
    let rows = (0..n_trials as u64)
        .into_par_iter()
        .map(|k| {
            let signal = scenario.simulate_signal_trial(k)?;
            let own;
            let reference = match &shared {
                Some(r) => r,
                None => {
                    own = scenario.simulate_trial_reference(k)?;
                    &own
                }
            };
            let o = ks_test(&signal, reference, &options.levels, options.mode)?;
            Ok((o.p_value, o.statistic, signal.total(), reference.total()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut batch = TrialBatch {
        descriptor: BatchDescriptor {
            label: label.to_string(),
            axis_value,
            n_signal: scenario.n_signal(),
            n_reference: scenario.n_reference(),
            seed: scenario.seed(),
            rng: RNG_NAME.to_string(),
        },
        p_values: Vec::with_capacity(n_trials),
        statistics: Vec::with_capacity(n_trials),
        realized_totals: Vec::with_capacity(n_trials),
        reference_totals: Vec::with_capacity(n_trials),
    };
    for (p, d, n, m) in rows {
        batch.p_values.push(p);
        batch.statistics.push(d);
        batch.realized_totals.push(n);
        batch.reference_totals.push(m);
    }
    Ok(batch)
}

/// One batch of a sweep family at a given axis value and signal budget.
pub fn run_trials<T: Real>(
    family: &ScenarioFamily<T>,
    axis_value: T,
    n_signal: u64,
    n_trials: usize,
    master_seed: u64,
    options: &TrialOptions<T>,
) -> Result<TrialBatch<T>> {
    let scenario = family.build(axis_value, n_signal, master_seed)?;
    run_batch(
        &scenario,
        family.kind.name(),
        Some(axis_value),
        n_trials,
        options,
    )
}

/// Fraction of trials with `p < significance`.
pub fn rejection_rate<T: Real>(batch: &TrialBatch<T>, significance: T) -> T {
    let hits = batch.p_values.iter().filter(|p| **p < significance).count();
    T::from_usize(hits).unwrap() / T::from_usize(batch.n_trials().max(1)).unwrap()
}

/// Box-plot summary: mean, quartiles and full range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PValueSummary<T: Real> {
    pub mean: T,
    pub q25: T,
    pub q75: T,
    pub min: T,
    pub max: T,
}

/// Percentile `q` in [0, 1] of an ascending slice, linear between order statistics.
pub fn percentile_sorted<T: Real>(sorted: &[T], q: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * T::from_usize(n - 1).unwrap();
    let lo = h.floor().to_usize().unwrap().min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = h - T::from_usize(lo).unwrap();
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn summarize<T: Real>(values: &[T]) -> Option<PValueSummary<T>> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in summary input"));
    let n = T::from_usize(values.len()).unwrap();
    Some(PValueSummary {
        mean: values.iter().copied().sum::<T>() / n,
        q25: percentile_sorted(&sorted, T::lit(0.25)),
        q75: percentile_sorted(&sorted, T::lit(0.75)),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

pub fn median<T: Real>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in median input"));
    Some(percentile_sorted(&sorted, T::lit(0.5)))
}

pub fn pvalue_stats<T: Real>(batch: &TrialBatch<T>) -> PValueSummary<T> {
    summarize(&batch.p_values).expect("batch has at least one trial")
}

/// Summary of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepCell<T: Real> {
    pub axis_value: T,
    pub n_signal: u64,
    /// One entry per significance level, in the sweep's level order.
    pub rejection_rates: Vec<T>,
    pub p_values: PValueSummary<T>,
    pub mean_detected: T,
}

impl<T: Real> SweepCell<T> {
    pub fn from_batch(batch: &TrialBatch<T>, levels: &[T]) -> Self {
        Self {
            axis_value: batch.descriptor.axis_value.unwrap_or_else(T::nan),
            n_signal: batch.descriptor.n_signal,
            rejection_rates: levels.iter().map(|&l| rejection_rate(batch, l)).collect(),
            p_values: pvalue_stats(batch),
            mean_detected: batch.mean_detected(),
        }
    }
}

/// Rejection rates and p-value boxes over an (axis, N_T) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepResult<T: Real> {
    pub family: SweepFamily,
    pub axis_values: Vec<T>,
    pub n_signal_values: Vec<u64>,
    pub levels: Vec<T>,
    pub n_trials: usize,
    pub master_seed: u64,
    pub rng: String,
    pub test_mode: TestMode,
    pub reference_mode: ReferenceMode,
    pub grid: WavelengthGrid<T>,
    /// Row-major: axis value outer, N_T inner.
    pub cells: Vec<SweepCell<T>>,
}

impl<T: Real> SweepResult<T> {
    pub fn cell(&self, axis_index: usize, nt_index: usize) -> &SweepCell<T> {
        &self.cells[axis_index * self.n_signal_values.len() + nt_index]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions<T: Real> {
    pub n_trials: usize,
    pub trial: TrialOptions<T>,
    /// Worker threads; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
}

impl<T: Real> Default for SweepOptions<T> {
    fn default() -> Self {
        Self {
            n_trials: DEFAULT_TRIALS,
            trial: TrialOptions::default(),
            jobs: None,
        }
    }
}

/// Seed of cell `(axis_index, nt_index)`, re-runnable in isolation.
pub fn cell_seed(master_seed: u64, axis_index: usize, nt_index: usize) -> u64 {
    derive_seed(master_seed, &[axis_index as u64, nt_index as u64])
}

pub fn sweep<T: Real>(
    family: &ScenarioFamily<T>,
    axis_values: &[T],
    n_signal_values: &[u64],
    options: &SweepOptions<T>,
    master_seed: u64,
) -> Result<SweepResult<T>> {
    sweep_with_progress(
        family,
        axis_values,
        n_signal_values,
        options,
        master_seed,
        |_, _| {},
    )
}

/// [`sweep`] calling `on_cell(index, cell)` as each cell completes.
pub fn sweep_with_progress<T: Real, F>(
    family: &ScenarioFamily<T>,
    axis_values: &[T],
    n_signal_values: &[u64],
    options: &SweepOptions<T>,
    master_seed: u64,
    on_cell: F,
) -> Result<SweepResult<T>>
where
    F: Fn(usize, &SweepCell<T>) + Sync,
{
    if axis_values.is_empty() || n_signal_values.is_empty() {
        return Err(invalid("sweep axes must be non-empty"));
    }
    if options.n_trials == 0 {
        return Err(invalid("n_trials must be >= 1"));
    }
    // validate every cell before any simulation starts
    for &a in axis_values {
        for &n in n_signal_values {
            family.build(a, n, 0)?;
        }
    }
    let width = n_signal_values.len();
    let run = || {
        (0..axis_values.len() * width)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / width, idx % width);
                let batch = run_trials(
                    family,
                    axis_values[i],
                    n_signal_values[j],
                    options.n_trials,
                    cell_seed(master_seed, i, j),
                    &options.trial,
                )?;
                let cell = SweepCell::from_batch(&batch, &options.trial.levels);
                on_cell(idx, &cell);
                Ok(cell)
            })
            .collect::<Result<Vec<_>>>()
    };
    let cells = match options.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok(SweepResult {
        family: family.kind,
        axis_values: axis_values.to_vec(),
        n_signal_values: n_signal_values.to_vec(),
        levels: options.trial.levels.clone(),
        n_trials: options.n_trials,
        master_seed,
        rng: RNG_NAME.to_string(),
        test_mode: options.trial.mode,
        reference_mode: options.trial.reference,
        grid: family.grid.clone(),
        cells,
    })
}

/// Photon-relabelling permutation p-value for the binned KS statistic.
///
/// Pools the photons of both spectra, repeatedly splits them at random into
/// groups of the original sizes and returns the fraction of splits whose
/// statistic is at least the observed one.
pub fn permutation_oracle<T: Real>(
    signal: &BinnedSpectrum<T>,
    reference: &BinnedSpectrum<T>,
    n_permutations: usize,
    seed: u64,
) -> Result<T> {
    signal.grid().ensure_same(reference.grid())?;
    if signal.total() == 0 || reference.total() == 0 {
        return Err(Error::EmptyMeasurement);
    }
    if n_permutations < 100 {
        return Err(invalid(
            "permutation oracle needs at least 100 permutations",
        ));
    }
    let bins = signal.len();
    let cumulative = |counts: &[u64]| -> Vec<u64> {
        counts
            .iter()
            .scan(0u64, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect()
    };
    let (ns, nr) = (signal.total(), reference.total());
    let observed = gap_numerator(
        &cumulative(signal.counts()),
        ns,
        &cumulative(reference.counts()),
        nr,
    );

    let mut pool: Vec<u32> = Vec::with_capacity((ns + nr) as usize);
    let mut pooled = vec![0u64; bins];
    for (b, (&a, &r)) in signal.counts().iter().zip(reference.counts()).enumerate() {
        pooled[b] = a + r;
        pool.extend(std::iter::repeat_n(b as u32, (a + r) as usize));
    }
    // the gap is symmetric in the two groups, so only the smaller one is drawn
    let (k, k_other) = if ns <= nr { (ns, nr) } else { (nr, ns) };
    let mut rng = stream_rng(seed, Stream::Reference);
    let mut drawn = vec![0u64; bins];
    let mut rest = vec![0u64; bins];
    let mut at_least = 0usize;
    for _ in 0..n_permutations {
        let len = pool.len();
        for i in 0..k as usize {
            let j = rng.random_range(i..len);
            pool.swap(i, j);
        }
        drawn.iter_mut().for_each(|c| *c = 0);
        for &b in &pool[..k as usize] {
            drawn[b as usize] += 1;
        }
        for ((r, p), d) in rest.iter_mut().zip(&pooled).zip(&drawn) {
            *r = p - d;
        }
        let g = gap_numerator(&cumulative(&drawn), k, &cumulative(&rest), k_other);
        if g >= observed {
            at_least += 1;
        }
    }
    Ok(T::from_usize(at_least).unwrap() / T::from_usize(n_permutations).unwrap())
}
