use std::fmt::Write as _;
use std::path::Path;

use super::{
    check_schema, fields, parse_err, parse_real, split_text, write_atomic, FormatError, Metadata,
};
use crate::error::Result;
use crate::ks::TestMode;
use crate::mc::{
    BatchDescriptor, PValueSummary, ReferenceMode, SweepCell, SweepFamily, SweepResult, TrialBatch,
};
use crate::real::Real;
use crate::spectra::WavelengthGrid;

pub const SWEEP_SCHEMA: &str = "ghostks-sweep/1";
pub const BATCH_SCHEMA: &str = "ghostks-batch/1";

const BATCH_COLUMNS: &str = "trial,p_value,statistic,detected,reference_total";

/// Column names of a sweep table for the given significance levels:
/// `axis1,n_t,reject@<level>...,p_mean,p_q25,p_q75,p_min,p_max,detected_mean`.
pub fn sweep_columns<T: Real>(levels: &[T]) -> Vec<String> {
    let mut cols = vec!["axis1".to_string(), "n_t".to_string()];
    cols.extend(levels.iter().map(|l| format!("reject@{l}")));
    cols.extend(
        [
            "p_mean",
            "p_q25",
            "p_q75",
            "p_min",
            "p_max",
            "detected_mean",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    cols
}

fn mode_name(m: TestMode) -> &'static str {
    match m {
        TestMode::TwoSample => "two-sample",
        TestMode::OneSample => "one-sample",
    }
}

fn reference_name(m: ReferenceMode) -> &'static str {
    match m {
        ReferenceMode::Shared => "shared",
        ReferenceMode::PerTrial => "per-trial",
    }
}

fn join_reals<T: Real>(v: &[T]) -> String {
    v.iter()
        .map(|x| format!("{x:e}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn write_grid<T: Real>(out: &mut String, grid: &WavelengthGrid<T>) {
    if grid.is_uniform() {
        writeln!(out, "# grid_start_nm={:e}", grid.first()).unwrap();
        writeln!(out, "# grid_step_nm={:e}", grid.mean_spacing()).unwrap();
        writeln!(out, "# grid_bins={}", grid.len()).unwrap();
    } else {
        writeln!(out, "# grid_centers_nm={}", join_reals(grid.centers())).unwrap();
    }
}

/// Reals are written in shortest round-trip exponent form, so reading a
/// table back reproduces every value bit for bit.
pub fn render_sweep<T: Real>(result: &SweepResult<T>) -> String {
    let mut out = String::new();
    writeln!(out, "# schema={SWEEP_SCHEMA}").unwrap();
    writeln!(out, "# family={}", result.family.name()).unwrap();
    writeln!(out, "# axis={}", result.family.axis_name()).unwrap();
    writeln!(out, "# seed={}", result.master_seed).unwrap();
    writeln!(out, "# rng={}", result.rng).unwrap();
    writeln!(out, "# trials={}", result.n_trials).unwrap();
    writeln!(out, "# levels={}", join_reals(&result.levels)).unwrap();
    writeln!(out, "# test_mode={}", mode_name(result.test_mode)).unwrap();
    writeln!(
        out,
        "# reference_mode={}",
        reference_name(result.reference_mode)
    )
    .unwrap();
    write_grid(&mut out, &result.grid);
    writeln!(out, "{}", sweep_columns(&result.levels).join(",")).unwrap();
    for c in &result.cells {
        let mut row = vec![format!("{:e}", c.axis_value), c.n_signal.to_string()];
        row.extend(c.rejection_rates.iter().map(|r| format!("{r:e}")));
        let p = &c.p_values;
        row.extend(
            [p.mean, p.q25, p.q75, p.min, p.max, c.mean_detected]
                .iter()
                .map(|v| format!("{v:e}")),
        );
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

pub fn write_sweep<T: Real>(result: &SweepResult<T>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), render_sweep(result).as_bytes())?;
    Ok(())
}

fn meta<'a>(m: &'a Metadata, key: &str) -> Result<&'a str, FormatError> {
    m.get(key)
        .map(String::as_str)
        .ok_or_else(|| parse_err(0, format!("missing header field `{key}`")))
}

fn meta_parse<V: std::str::FromStr>(m: &Metadata, key: &str) -> Result<V, FormatError> {
    let v = meta(m, key)?;
    v.parse()
        .map_err(|_| parse_err(0, format!("header field `{key}`=`{v}` is invalid")))
}

fn split_reals<T: Real>(s: &str, what: &str) -> Result<Vec<T>, FormatError> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_real(t.trim(), 0, what))
        .collect()
}

fn read_grid<T: Real>(m: &Metadata) -> Result<WavelengthGrid<T>> {
    if let Some(c) = m.get("grid_centers_nm") {
        return WavelengthGrid::new(split_reals(c, "grid center")?);
    }
    let start: T = parse_real(meta(m, "grid_start_nm")?, 0, "grid start")?;
    let step: T = parse_real(meta(m, "grid_step_nm")?, 0, "grid step")?;
    let bins: usize = meta_parse(m, "grid_bins")?;
    WavelengthGrid::uniform(start, step, bins)
}

pub fn read_sweep<T: Real>(path: impl AsRef<Path>) -> Result<SweepResult<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_sweep(&text)
}

pub(crate) fn parse_sweep<T: Real>(text: &str) -> Result<SweepResult<T>> {
    let file = split_text(text);
    check_schema(&file.schema, SWEEP_SCHEMA, true)?;
    let m = &file.metadata;
    let family_name = meta(m, "family")?;
    let family = SweepFamily::parse(family_name)
        .ok_or_else(|| parse_err(0, format!("unknown family `{family_name}`")))?;
    let levels: Vec<T> = split_reals(meta(m, "levels")?, "level")?;
    let test_mode = match meta(m, "test_mode")? {
        "two-sample" => TestMode::TwoSample,
        "one-sample" => TestMode::OneSample,
        other => return Err(parse_err(0, format!("unknown test_mode `{other}`")).into()),
    };
    let reference_mode = match meta(m, "reference_mode")? {
        "shared" => ReferenceMode::Shared,
        "per-trial" => ReferenceMode::PerTrial,
        other => return Err(parse_err(0, format!("unknown reference_mode `{other}`")).into()),
    };
    let expected_cols = sweep_columns(&levels);
    let mut rows = file.rows.iter();
    let (hline, header) = rows.next().ok_or(FormatError::TooFewRows {
        needed: 1,
        found: 0,
    })?;
    if fields(header) != expected_cols {
        return Err(parse_err(
            *hline,
            format!("column header does not match `{}`", expected_cols.join(",")),
        )
        .into());
    }
    let mut cells = Vec::new();
    let mut axis_values: Vec<T> = Vec::new();
    let mut n_signal_values: Vec<u64> = Vec::new();
    for &(line, row) in rows {
        let f = fields(row);
        if f.len() != expected_cols.len() {
            return Err(FormatError::RaggedRow {
                line,
                expected: expected_cols.len(),
                found: f.len(),
            }
            .into());
        }
        let real = |i: usize| parse_real::<T>(f[i], line, &expected_cols[i]);
        let axis_value = real(0)?;
        let n_signal: u64 = f[1]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid n_t `{}`", f[1])))?;
        let k = levels.len();
        let rejection_rates = (0..k).map(|i| real(2 + i)).collect::<Result<Vec<_>, _>>()?;
        let p_values = PValueSummary {
            mean: real(2 + k)?,
            q25: real(3 + k)?,
            q75: real(4 + k)?,
            min: real(5 + k)?,
            max: real(6 + k)?,
        };
        let mean_detected = real(7 + k)?;
        if !axis_values.contains(&axis_value) {
            axis_values.push(axis_value);
        }
        if !n_signal_values.contains(&n_signal) {
            n_signal_values.push(n_signal);
        }
        cells.push(SweepCell {
            axis_value,
            n_signal,
            rejection_rates,
            p_values,
            mean_detected,
        });
    }
    if cells.len() != axis_values.len() * n_signal_values.len() {
        return Err(parse_err(0, "sweep rows do not form a complete grid").into());
    }
    Ok(SweepResult {
        family,
        axis_values,
        n_signal_values,
        levels,
        n_trials: meta_parse(m, "trials")?,
        master_seed: meta_parse(m, "seed")?,
        rng: meta(m, "rng")?.to_string(),
        test_mode,
        reference_mode,
        grid: read_grid(m)?,
        cells,
    })
}

pub fn write_batch<T: Real>(batch: &TrialBatch<T>, path: impl AsRef<Path>) -> Result<()> {
    let d = &batch.descriptor;
    let mut out = String::new();
    writeln!(out, "# schema={BATCH_SCHEMA}").unwrap();
    writeln!(out, "# label={}", d.label).unwrap();
    if let Some(a) = d.axis_value {
        writeln!(out, "# axis_value={a:e}").unwrap();
    }
    writeln!(out, "# n_signal={}", d.n_signal).unwrap();
    writeln!(out, "# n_reference={}", d.n_reference).unwrap();
    writeln!(out, "# seed={}", d.seed).unwrap();
    writeln!(out, "# rng={}", d.rng).unwrap();
    writeln!(out, "# trials={}", batch.n_trials()).unwrap();
    writeln!(out, "{BATCH_COLUMNS}").unwrap();
    for k in 0..batch.n_trials() {
        writeln!(
            out,
            "{k},{:e},{:e},{},{}",
            batch.p_values[k],
            batch.statistics[k],
            batch.realized_totals[k],
            batch.reference_totals[k]
        )
        .unwrap();
    }
    write_atomic(path.as_ref(), out.as_bytes())?;
    Ok(())
}

pub fn read_batch<T: Real>(path: impl AsRef<Path>) -> Result<TrialBatch<T>> {
    let text = std::fs::read_to_string(path)?;
    let file = split_text(&text);
    check_schema(&file.schema, BATCH_SCHEMA, true)?;
    let m = &file.metadata;
    let axis_value = match m.get("axis_value") {
        Some(v) => Some(parse_real(v, 0, "axis_value")?),
        None => None,
    };
    let mut rows = file.rows.iter();
    match rows.next() {
        Some((_, h)) if fields(h).join(",") == BATCH_COLUMNS => {}
        Some((line, _)) => {
            return Err(
                parse_err(*line, format!("expected column header `{BATCH_COLUMNS}`")).into(),
            )
        }
        None => {
            return Err(FormatError::TooFewRows {
                needed: 1,
                found: 0,
            }
            .into())
        }
    }
    let mut batch = TrialBatch {
        descriptor: BatchDescriptor {
            label: meta(m, "label")?.to_string(),
            axis_value,
            n_signal: meta_parse(m, "n_signal")?,
            n_reference: meta_parse(m, "n_reference")?,
            seed: meta_parse(m, "seed")?,
            rng: meta(m, "rng")?.to_string(),
        },
        p_values: Vec::new(),
        statistics: Vec::new(),
        realized_totals: Vec::new(),
        reference_totals: Vec::new(),
    };
    for &(line, row) in rows {
        let f = fields(row);
        if f.len() != 5 {
            return Err(FormatError::RaggedRow {
                line,
                expected: 5,
                found: f.len(),
            }
            .into());
        }
        let int = |i: usize| -> Result<u64, FormatError> {
            f[i].parse()
                .map_err(|_| parse_err(line, format!("invalid integer `{}`", f[i])))
        };
        batch.p_values.push(parse_real(f[1], line, "p_value")?);
        batch.statistics.push(parse_real(f[2], line, "statistic")?);
        batch.realized_totals.push(int(3)?);
        batch.reference_totals.push(int(4)?);
    }
    let trials: usize = meta_parse(m, "trials")?;
    if trials != batch.n_trials() {
        return Err(parse_err(
            0,
            format!("header says {trials} trials, found {}", batch.n_trials()),
        )
        .into());
    }
    Ok(batch)
}
