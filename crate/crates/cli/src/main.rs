//! `ghostks` command-line interface.
//!
//! Exit codes: 0 success (or "no object" for `test`), 10 object detected at
//! the first requested level, 2 usage or parameter error, 3 data or I/O
//! error.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ghostks::io::{
    load_count_image, load_spectrum, pvalue_boxes, read_sweep, rejection_bars, save_spectrum,
    write_archive, write_boxes, write_rejection_bars, write_sweep, GridConfig, Metadata,
    ScenarioConfig, ScenarioKind, SweepArchive, SCENARIO_SCHEMA,
};
use ghostks::rng::RNG_NAME;
use ghostks::{
    integrate_roi, ks_test, Error, ReferenceMode, ScenarioFamily, SweepFamily, SweepOptions,
    TestMode, TrialOptions,
};

const EXIT_REJECT: u8 = 10;
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ghostks",
    version,
    about = "Ghost-spectrometry object detection with a binned KS test"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one reference and one signal spectrum.
    Simulate(SimulateArgs),
    /// Test a signal spectrum against a reference spectrum.
    Test(TestArgs),
    /// Monte Carlo sweep over absorber strength and signal budget.
    Sweep(SweepArgs),
    /// Integrate a region of interest of a count image into a spectrum.
    Ingest(IngestArgs),
    /// Derive plot-ready series from a sweep table.
    Report(ReportArgs),
}

#[derive(Args)]
struct GridArgs {
    /// First bin center in nm.
    #[arg(long, default_value_t = 790.0)]
    grid_start: f64,
    /// Bin spacing in nm.
    #[arg(long, default_value_t = 0.25)]
    grid_step: f64,
    /// Number of bins.
    #[arg(long, default_value_t = 120)]
    grid_bins: usize,
}

impl GridArgs {
    fn config(&self) -> GridConfig {
        GridConfig {
            start_nm: self.grid_start,
            step_nm: self.grid_step,
            bins: self.grid_bins,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Broad,
    Narrow,
    Supergaussian,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config (TOML); replaces the scenario flags below.
    #[arg(long, conflicts_with_all = ["scenario", "alpha", "sigma", "nt", "detected_target", "nr"])]
    config: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "config")]
    scenario: Option<Kind>,
    /// Absorber slope in 1/nm (broad).
    #[arg(long)]
    alpha: Option<f64>,
    /// Dip width in nm (narrow).
    #[arg(long)]
    sigma: Option<f64>,
    /// Signal-arm resource budget.
    #[arg(long)]
    nt: Option<u64>,
    /// Choose the signal budget so this many photons are expected.
    #[arg(long, conflicts_with = "nt")]
    detected_target: Option<u64>,
    /// Reference-arm resource budget (family default when omitted).
    #[arg(long)]
    nr: Option<u64>,
    /// Master seed; drawn from OS entropy and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    grid: GridArgs,
    /// Directory for reference.csv, signal.csv and scenario.toml.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    signal: PathBuf,
    reference: PathBuf,
    /// Significance levels; the first one sets the exit code.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.01")]
    levels: Vec<f64>,
    /// Treat the reference as the exact population CDF.
    #[arg(long)]
    one_sample: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Broad,
    Narrow,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Axis values: slopes in 1/nm (broad) or widths in nm (narrow).
    #[arg(long, value_delimiter = ',', required = true)]
    axis: Vec<f64>,
    /// Signal budgets.
    #[arg(long, value_delimiter = ',', required = true)]
    nt: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.01")]
    levels: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    jobs: Option<usize>,
    /// Sweep table to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write a single-file JSON archive of the whole sweep.
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Draw a fresh reference spectrum for every trial.
    #[arg(long)]
    per_trial_reference: bool,
    #[arg(long)]
    one_sample: bool,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct IngestArgs {
    image: PathBuf,
    /// Row range `start:end` (end exclusive).
    #[arg(long, value_parser = parse_roi)]
    roi: Range<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Figure {
    Bars,
    Boxes,
    All,
}

#[derive(Args)]
struct ReportArgs {
    sweep: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    figure: Figure,
}

fn parse_roi(s: &str) -> std::result::Result<Range<usize>, String> {
    let (a, b) = s.split_once(':').ok_or("expected `start:end`")?;
    let start = a
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("start: {e}"))?;
    let end = b.trim().parse::<usize>().map_err(|e| format!("end: {e}"))?;
    if end <= start {
        return Err(format!("empty row range {start}:{end}"));
    }
    Ok(start..end)
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed {s} (from OS entropy)");
        s
    })
}

fn simulate(args: SimulateArgs) -> Result<u8> {
    let mut config = match &args.config {
        Some(path) => {
            ScenarioConfig::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => ScenarioConfig {
            schema: SCENARIO_SCHEMA.into(),
            kind: match args.scenario.expect("required by clap") {
                Kind::Broad => ScenarioKind::Broad,
                Kind::Narrow => ScenarioKind::Narrow,
                Kind::Supergaussian => ScenarioKind::Supergaussian,
            },
            alpha_per_nm: args.alpha,
            sigma_nm: args.sigma,
            n_signal: args.nt,
            detected_target: args.detected_target,
            n_reference: args.nr,
            seed: 0,
            grid: args.grid.config(),
            table: None,
        },
    };
    if args.config.is_none() || args.seed.is_some() {
        config.seed = seed_or_entropy(args.seed);
    }
    let scenario = config.to_scenario::<f64>()?;
    let reference = scenario.simulate_reference()?;
    let signal = scenario.simulate_signal_trial(0)?;
    println!("seed {}", scenario.seed());
    println!("rng {RNG_NAME}");
    println!(
        "n_reference {} realized {}",
        scenario.n_reference(),
        reference.total()
    );
    println!(
        "n_signal {} expected {:.3} realized {}",
        scenario.n_signal(),
        scenario.expected_detected()?,
        signal.total()
    );
    if let Some(dir) = args.out_dir {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let meta = |arm: &str, n: u64| -> Metadata {
            [
                ("arm", arm.to_string()),
                ("resources", n.to_string()),
                ("seed", scenario.seed().to_string()),
                ("rng", RNG_NAME.to_string()),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
        };
        save_spectrum(
            dir.join("reference.csv"),
            &reference,
            &meta("reference", scenario.n_reference()),
        )?;
        save_spectrum(
            dir.join("signal.csv"),
            &signal,
            &meta("signal", scenario.n_signal()),
        )?;
        let resolved = ScenarioConfig {
            n_signal: Some(scenario.n_signal()),
            detected_target: None,
            n_reference: Some(scenario.n_reference()),
            seed: scenario.seed(),
            ..config
        };
        resolved.save(dir.join("scenario.toml"))?;
        println!("wrote {}", dir.display());
    }
    Ok(0)
}

fn test(args: TestArgs) -> Result<u8> {
    let signal = load_spectrum::<f64>(&args.signal)
        .with_context(|| format!("reading {}", args.signal.display()))?;
    let reference = load_spectrum::<f64>(&args.reference)
        .with_context(|| format!("reading {}", args.reference.display()))?;
    let mode = if args.one_sample {
        TestMode::OneSample
    } else {
        TestMode::TwoSample
    };
    let out = ks_test(&signal.spectrum, &reference.spectrum, &args.levels, mode)?;
    println!("statistic    {}", out.statistic);
    println!("n_signal     {}", out.n_signal);
    println!("n_reference  {}", out.n_reference);
    println!("effective_n  {}", out.effective_n);
    println!("p_value      {:e}", out.p_value);
    for d in &out.decisions {
        let verdict = if d.reject {
            "object detected"
        } else {
            "no object"
        };
        println!("level {:<6} {verdict}", d.significance);
    }
    let mut line = format!(
        "result statistic={:e} n_signal={} n_reference={} effective_n={:e} p_value={:e}",
        out.statistic, out.n_signal, out.n_reference, out.effective_n, out.p_value
    );
    for d in &out.decisions {
        line += &format!(" reject@{}={}", d.significance, d.reject as u8);
    }
    println!("{line}");
    Ok(if out.decisions[0].reject {
        EXIT_REJECT
    } else {
        0
    })
}

fn run_sweep(args: SweepArgs) -> Result<u8> {
    let kind = match args.family {
        Family::Broad => SweepFamily::Broad,
        Family::Narrow => SweepFamily::Narrow,
    };
    let family = ScenarioFamily::new(kind, args.grid.config().build::<f64>()?);
    let seed = seed_or_entropy(args.seed);
    let opts = SweepOptions {
        n_trials: args.trials,
        trial: TrialOptions {
            levels: args.levels,
            mode: if args.one_sample {
                TestMode::OneSample
            } else {
                TestMode::TwoSample
            },
            reference: if args.per_trial_reference {
                ReferenceMode::PerTrial
            } else {
                ReferenceMode::Shared
            },
        },
        jobs: args.jobs,
    };
    let total = args.axis.len() * args.nt.len();
    let done = AtomicUsize::new(0);
    let result =
        ghostks::mc::sweep_with_progress(&family, &args.axis, &args.nt, &opts, seed, |_, cell| {
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            eprintln!(
                "[{n}/{total}] {}={} n_t={} reject@{}={}",
                kind.axis_name(),
                cell.axis_value,
                cell.n_signal,
                opts.trial.levels[0],
                cell.rejection_rates[0]
            );
        })?;
    write_sweep(&result, &args.out)?;
    println!("wrote {} (seed {seed}, {total} cells)", args.out.display());
    if let Some(path) = args.archive {
        write_archive(&SweepArchive::new(result, None), &path)?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn ingest(args: IngestArgs) -> Result<u8> {
    let img = load_count_image::<f64>(&args.image)
        .with_context(|| format!("reading {}", args.image.display()))?;
    let spectrum = integrate_roi(&img.image, args.roi.clone(), &img.grid)?;
    let meta: Metadata = [
        ("source".to_string(), file_name(&args.image)),
        (
            "roi_rows".to_string(),
            format!("{}:{}", args.roi.start, args.roi.end),
        ),
    ]
    .into();
    save_spectrum(&args.out, &spectrum, &meta)?;
    println!(
        "wrote {} ({} bins, {} counts)",
        args.out.display(),
        spectrum.counts().len(),
        spectrum.total()
    );
    Ok(0)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn report(args: ReportArgs) -> Result<u8> {
    let sweep = read_sweep::<f64>(&args.sweep)
        .with_context(|| format!("reading {}", args.sweep.display()))?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let axis = sweep.family.axis_name();
    if matches!(args.figure, Figure::Bars | Figure::All) {
        let path = args.out_dir.join("rejection_bars.csv");
        write_rejection_bars(&rejection_bars(&sweep), axis, &path)?;
        println!("wrote {}", path.display());
    }
    if matches!(args.figure, Figure::Boxes | Figure::All) {
        let path = args.out_dir.join("pvalue_boxes.csv");
        write_boxes(&pvalue_boxes(&sweep), axis, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidParameter(_)) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Test(a) => test(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Ingest(a) => ingest(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
