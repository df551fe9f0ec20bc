//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::time::{Duration, Instant};

use ghostks::io::render_sweep;
use ghostks::mc::median;
use ghostks::sim::scenario_supergaussian_filter;
use ghostks::{
    empirical_cdf, kolmogorov_sf, ks_statistic, make_gaussian_reference, permutation_oracle,
    rejection_rate, run_trials, sample_poisson_counts, sweep, two_sample_test, Grid,
    ScenarioFamily, Spectrum, SweepFamily, SweepOptions, TrialOptions,
};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NT_GRID: [u64; 5] = [300, 1_000, 3_000, 10_000, 30_000];
const TRIALS: usize = 100;
const LEVEL: f64 = 0.05;

// Thresholds, pinned.
const NULL_MAX_REJECTION: f64 = 0.08;
const NULL_RUNTIME: Duration = Duration::from_secs(60);
const STRONG_MIN_REJECTION: f64 = 0.99;
const STRONG_MAX_NT: u64 = 30_000;
const DIP_MIN_REJECTION: f64 = 0.95;
const MONOTONE_RETRY_TRIALS: usize = 1_000;
const ORACLE_PAIRS: usize = 1_000;
const ORACLE_RUNTIME: Duration = Duration::from_secs(5);
const SF_POINTS: usize = 50;
const SF_TOLERANCE: f64 = 1e-9;
const CONSERVATISM_BATCHES: u64 = 50;
const CONSERVATISM_SIGNAL: u64 = 1_000;
const CONSERVATISM_REFERENCE: u64 = 100_000;
const CONSERVATISM_PERMUTATIONS: usize = 1_000;
const CONSERVATISM_RATE_SLACK: f64 = 0.02;
const EXPERIMENT_DETECTED: u64 = 228;
const EXPERIMENT_TOTAL_TOLERANCE: f64 = 0.10;
const EXPERIMENT_P_BOUND: f64 = 1e-6;
const EXPERIMENT_MIN_HITS: usize = 95;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn null_calibration() -> Check {
    let start = Instant::now();
    let family = ScenarioFamily::on_default_grid(SweepFamily::Broad);
    let s = sweep(&family, &[0.0], &NT_GRID, &SweepOptions::default(), 1001)
        .map_err(|e| e.to_string())?;
    let rates: Vec<f64> = s.cells.iter().map(|c| c.rejection_rates[0]).collect();
    let elapsed = start.elapsed();
    let detail = format!("rates@0.05 {rates:?} in {:.2?}", elapsed);
    if rates.iter().all(|&r| r <= NULL_MAX_REJECTION) && elapsed < NULL_RUNTIME {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn strong_absorber() -> Check {
    let family = ScenarioFamily::on_default_grid(SweepFamily::Broad);
    let s = sweep(&family, &[0.016], &NT_GRID, &SweepOptions::default(), 1002)
        .map_err(|e| e.to_string())?;
    let rates: Vec<(u64, f64)> = s
        .cells
        .iter()
        .map(|c| (c.n_signal, c.rejection_rates[0]))
        .collect();
    let detail = format!("(N_T, rate@0.05) {rates:?}");
    if rates
        .iter()
        .any(|&(n, r)| n <= STRONG_MAX_NT && r >= STRONG_MIN_REJECTION)
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn narrow_dip() -> Check {
    let family = ScenarioFamily::on_default_grid(SweepFamily::Narrow);
    let b = run_trials(&family, 6.0, 15_000, TRIALS, 1003, &TrialOptions::default())
        .map_err(|e| e.to_string())?;
    let r = rejection_rate(&b, LEVEL);
    let detail = format!(
        "sigma=6 nm, N_T=15000: rate@0.05 {r}, mean detected {:.0}",
        b.mean_detected()
    );
    if r >= DIP_MIN_REJECTION {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn median_statistics(
    kind: SweepFamily,
    axis: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let family = ScenarioFamily::on_default_grid(kind);
    axis.iter()
        .enumerate()
        .map(|(i, &a)| {
            let b = run_trials(
                &family,
                a,
                10_000,
                trials,
                seed + i as u64,
                &TrialOptions::default(),
            )
            .map_err(|e| e.to_string())?;
            Ok(median(&b.statistics).unwrap())
        })
        .collect()
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

fn monotonicity() -> Check {
    let mut notes = Vec::new();
    for (kind, axis) in [
        (SweepFamily::Broad, vec![0.0, 0.004, 0.008, 0.012, 0.016]),
        (SweepFamily::Narrow, vec![0.0, 2.0, 4.0, 6.0]),
    ] {
        let m = median_statistics(kind, &axis, TRIALS, 1004)?;
        if nondecreasing(&m) {
            notes.push(format!("{} medians {m:.4?}", kind.name()));
            continue;
        }
        let retry = median_statistics(kind, &axis, MONOTONE_RETRY_TRIALS, 1004)?;
        let line = format!(
            "{} medians {m:.4?} -> at 1000 trials {retry:.4?}",
            kind.name()
        );
        if !nondecreasing(&retry) {
            return Err(line);
        }
        notes.push(line);
    }
    Ok(notes.join("; "))
}

fn rational_ks(a: &[u64], b: &[u64]) -> f64 {
    let (na, nb) = (a.iter().sum::<u64>() as i128, b.iter().sum::<u64>() as i128);
    let (mut pa, mut pb) = (0i128, 0i128);
    let mut best = Ratio::from_integer(0i128);
    for i in 0..a.len() {
        pa += a[i] as i128;
        pb += b[i] as i128;
        let d = Ratio::new(pa, na) - Ratio::new(pb, nb);
        let d = if d < Ratio::from_integer(0) { -d } else { d };
        best = best.max(d);
    }
    *best.numer() as f64 / *best.denom() as f64
}

fn ks_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut mismatches = 0;
    for _ in 0..ORACLE_PAIRS {
        let bins = rng.random_range(2..=10);
        let draw = |rng: &mut ChaCha8Rng| {
            let n = rng.random_range(1..=30);
            let mut c = vec![0u64; bins];
            for _ in 0..n {
                c[rng.random_range(0..bins)] += 1;
            }
            c
        };
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        let g = Grid::uniform(0.0, 1.0, bins).unwrap();
        let fa = empirical_cdf(&Spectrum::new(g.clone(), a.clone()).unwrap()).unwrap();
        let fb = empirical_cdf(&Spectrum::new(g, b.clone()).unwrap()).unwrap();
        let got = ks_statistic(&fa, &fb).unwrap();
        let round = |x: f64| (x * 1e12).round() / 1e12;
        if round(got) != round(rational_ks(&a, &b)) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("{mismatches} mismatches in {ORACLE_PAIRS} pairs, {elapsed:.2?}");
    if mismatches == 0 && elapsed < ORACLE_RUNTIME {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn series_oracle(x: f64) -> f64 {
    let mut terms = Vec::new();
    let mut k = 1u64;
    loop {
        let t = (-2.0 * (k * k) as f64 * x * x).exp();
        if t < 1e-18 {
            break;
        }
        terms.push(if k % 2 == 1 { t } else { -t });
        k += 1;
    }
    2.0 * terms.iter().rev().sum::<f64>()
}

fn kolmogorov_numerics() -> Check {
    let worst = (0..SF_POINTS)
        .map(|i| {
            let x = 0.3 + 2.7 * i as f64 / (SF_POINTS - 1) as f64;
            (kolmogorov_sf(x).unwrap() - series_oracle(x)).abs()
        })
        .fold(0.0, f64::max);
    let detail = format!("max |error| {worst:.3e} over {SF_POINTS} points in [0.3, 3.0]");
    if worst < SF_TOLERANCE {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn conservatism() -> Check {
    let g = Grid::default_simulation();
    let d = make_gaussian_reference(&g, 805.0, 4.0).unwrap();
    let (mut asym, mut perm) = (Vec::new(), Vec::new());
    for k in 0..CONSERVATISM_BATCHES {
        let r = sample_poisson_counts(&d, CONSERVATISM_REFERENCE, 10_000 + k).unwrap();
        let s = sample_poisson_counts(&d, CONSERVATISM_SIGNAL, 20_000 + k).unwrap();
        asym.push(two_sample_test(&s, &r, &[LEVEL]).unwrap().p_value);
        perm.push(
            permutation_oracle::<f64>(&s, &r, CONSERVATISM_PERMUTATIONS, 30_000 + k).unwrap(),
        );
    }
    let n = CONSERVATISM_BATCHES as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let rate = |v: &[f64]| v.iter().filter(|&&p| p < LEVEL).count() as f64 / n;
    let detail = format!(
        "mean p asymptotic {:.4} vs permutation {:.4}; rate@0.05 {:.2} vs {:.2}",
        mean(&asym),
        mean(&perm),
        rate(&asym),
        rate(&perm)
    );
    if mean(&asym) >= mean(&perm) && rate(&asym) <= rate(&perm) + CONSERVATISM_RATE_SLACK {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn experiment_shaped() -> Check {
    let base = scenario_supergaussian_filter::<f64>(1, 1008).map_err(|e| e.to_string())?;
    let n_signal = base
        .signal_resources_for_detected(EXPERIMENT_DETECTED)
        .map_err(|e| e.to_string())?;
    let scenario = base
        .with_signal_resources(n_signal)
        .map_err(|e| e.to_string())?;
    let reference = scenario.simulate_reference().map_err(|e| e.to_string())?;
    let target = EXPERIMENT_DETECTED as f64;
    let (mut kept, mut hits, mut worst) = (0usize, 0usize, 0.0f64);
    let mut k = 0u64;
    while kept < TRIALS {
        let signal = scenario
            .simulate_signal_trial(k)
            .map_err(|e| e.to_string())?;
        k += 1;
        if ((signal.total() as f64 - target) / target).abs() > EXPERIMENT_TOTAL_TOLERANCE {
            continue;
        }
        kept += 1;
        let p = two_sample_test(&signal, &reference, &[LEVEL])
            .unwrap()
            .p_value;
        worst = worst.max(p);
        if p < EXPERIMENT_P_BOUND {
            hits += 1;
        }
    }
    let detail = format!(
        "N_T={n_signal}: {hits}/{TRIALS} trials with p < 1e-6 (largest p {worst:.2e}; {k} draws for {TRIALS} within 10% of 228)"
    );
    if hits >= EXPERIMENT_MIN_HITS {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Check {
    let family = ScenarioFamily::on_default_grid(SweepFamily::Broad);
    let axis = [0.0, 0.008, 0.016];
    let nts = [300, 3_000, 30_000];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for (run, jobs) in [(0, 1), (1, 8), (2, 8)] {
        let opts = SweepOptions {
            jobs: Some(jobs),
            ..SweepOptions::default()
        };
        let s = sweep(&family, &axis, &nts, &opts, 1009).map_err(|e| e.to_string())?;
        let p = dir.path().join(format!("run{run}.csv"));
        ghostks::io::write_sweep(&s, &p).map_err(|e| e.to_string())?;
        files.push(std::fs::read(&p).map_err(|e| e.to_string())?);
        if run == 0 && render_sweep(&s).as_bytes() != files[0].as_slice() {
            return Err("written table differs from rendered table".into());
        }
    }
    let detail = format!("3 runs (jobs 1, 8, 8), {} bytes each", files[0].len());
    if files.windows(2).all(|w| w[0] == w[1]) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "AC1 null calibration (alpha=0, rejection@0.05 <= 0.08 per N_T cell, < 60 s)",
            null_calibration,
        ),
        (
            "AC2 strong absorber (alpha=0.016 reaches >= 0.99 rejection at some N_T <= 30000)",
            strong_absorber,
        ),
        (
            "AC3 narrow dip (sigma=6 nm, N_T=15000, rejection@0.05 >= 0.95)",
            narrow_dip,
        ),
        (
            "AC4 median KS statistic nondecreasing in alpha and sigma at N_T=10000",
            monotonicity,
        ),
        (
            "AC5 KS statistic equals exact-rational brute force (1000 pairs, 12 dp, < 5 s)",
            ks_oracle,
        ),
        (
            "AC6 Kolmogorov survival function within 1e-9 of series oracle",
            kolmogorov_numerics,
        ),
        (
            "AC7 asymptotic p-value conservative versus permutation oracle",
            conservatism,
        ),
        (
            "AC8 228-photon super-Gaussian filter rejected at p < 1e-6 in >= 95/100",
            experiment_shaped,
        ),
        (
            "AC9 sweep tables byte-identical across reruns and job counts",
            determinism,
        ),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        match check() {
            Ok(detail) => println!("PASS  {name}\n      {detail} [{:.2?}]", start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}\n      {detail} [{:.2?}]", start.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
