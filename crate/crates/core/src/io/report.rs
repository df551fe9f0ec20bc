//! Plot-ready series derived from a sweep: rejection/acceptance bars and
//! p-value boxes (mean centre, quartile edges, whiskers to the extremes).

use std::fmt::Write as _;
use std::path::Path;

use super::{check_schema, fields, parse_err, parse_real, split_text, write_atomic, FormatError};
use crate::error::Result;
use crate::mc::SweepResult;
use crate::real::Real;

pub const BARS_SCHEMA: &str = "ghostks-report-bars/1";
pub const BOXES_SCHEMA: &str = "ghostks-report-boxes/1";

/// One bar group: per level, the rejected and accepted fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct BarRow<T: Real> {
    pub axis_value: T,
    pub n_signal: u64,
    /// `(level, rejected, accepted)`, with `rejected + accepted = 1`.
    pub bars: Vec<(T, T, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRow<T: Real> {
    pub axis_value: T,
    pub n_signal: u64,
    pub mean: T,
    pub q25: T,
    pub q75: T,
    pub min: T,
    pub max: T,
    pub detected_mean: T,
}

pub fn rejection_bars<T: Real>(result: &SweepResult<T>) -> Vec<BarRow<T>> {
    result
        .cells
        .iter()
        .map(|c| BarRow {
            axis_value: c.axis_value,
            n_signal: c.n_signal,
            bars: result
                .levels
                .iter()
                .zip(&c.rejection_rates)
                .map(|(&l, &r)| (l, r, T::one() - r))
                .collect(),
        })
        .collect()
}

pub fn pvalue_boxes<T: Real>(result: &SweepResult<T>) -> Vec<BoxRow<T>> {
    result
        .cells
        .iter()
        .map(|c| BoxRow {
            axis_value: c.axis_value,
            n_signal: c.n_signal,
            mean: c.p_values.mean,
            q25: c.p_values.q25,
            q75: c.p_values.q75,
            min: c.p_values.min,
            max: c.p_values.max,
            detected_mean: c.mean_detected,
        })
        .collect()
}

fn bar_columns<T: Real>(levels: &[T]) -> Vec<String> {
    let mut cols = vec!["axis1".to_string(), "n_t".to_string()];
    for l in levels {
        cols.push(format!("reject@{l}"));
        cols.push(format!("accept@{l}"));
    }
    cols
}

const BOX_COLUMNS: &str = "axis1,n_t,p_mean,p_q25,p_q75,p_min,p_max,detected_mean";

/// Columns: `axis1,n_t` then `reject@<level>,accept@<level>` per level.
pub fn write_rejection_bars<T: Real>(
    rows: &[BarRow<T>],
    axis_name: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# schema={BARS_SCHEMA}").unwrap();
    writeln!(out, "# axis={axis_name}").unwrap();
    let levels: Vec<T> = rows
        .first()
        .map(|r| r.bars.iter().map(|b| b.0).collect())
        .unwrap_or_default();
    writeln!(out, "{}", bar_columns(&levels).join(",")).unwrap();
    for r in rows {
        let mut f = vec![format!("{:e}", r.axis_value), r.n_signal.to_string()];
        for (_, rej, acc) in &r.bars {
            f.push(format!("{rej:e}"));
            f.push(format!("{acc:e}"));
        }
        writeln!(out, "{}", f.join(",")).unwrap();
    }
    write_atomic(path.as_ref(), out.as_bytes())?;
    Ok(())
}

/// Columns: `axis1,n_t,p_mean,p_q25,p_q75,p_min,p_max,detected_mean`.
pub fn write_boxes<T: Real>(
    rows: &[BoxRow<T>],
    axis_name: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# schema={BOXES_SCHEMA}").unwrap();
    writeln!(out, "# axis={axis_name}").unwrap();
    writeln!(out, "{BOX_COLUMNS}").unwrap();
    for r in rows {
        writeln!(
            out,
            "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.axis_value, r.n_signal, r.mean, r.q25, r.q75, r.min, r.max, r.detected_mean
        )
        .unwrap();
    }
    write_atomic(path.as_ref(), out.as_bytes())?;
    Ok(())
}

fn parse_level(col: &str, prefix: &str, line: usize) -> Result<f64, FormatError> {
    col.strip_prefix(prefix)
        .and_then(|l| l.parse().ok())
        .ok_or_else(|| parse_err(line, format!("unexpected column `{col}`")))
}

pub fn read_rejection_bars<T: Real>(path: impl AsRef<Path>) -> Result<Vec<BarRow<T>>> {
    let text = std::fs::read_to_string(path)?;
    let file = split_text(&text);
    check_schema(&file.schema, BARS_SCHEMA, true)?;
    let mut rows = file.rows.iter();
    let (hline, header) = rows.next().ok_or(FormatError::TooFewRows {
        needed: 1,
        found: 0,
    })?;
    let cols = fields(header);
    if cols.len() < 2 || cols[0] != "axis1" || cols[1] != "n_t" || !cols.len().is_multiple_of(2) {
        return Err(parse_err(*hline, "malformed bar header").into());
    }
    let levels = cols[2..]
        .chunks(2)
        .map(|c| {
            let l = parse_level(c[0], "reject@", *hline)?;
            if parse_level(c[1], "accept@", *hline)? != l {
                return Err(parse_err(*hline, "reject/accept columns disagree"));
            }
            Ok(T::lit(l))
        })
        .collect::<Result<Vec<T>, _>>()?;
    let mut out = Vec::new();
    for &(line, row) in rows {
        let f = fields(row);
        if f.len() != cols.len() {
            return Err(FormatError::RaggedRow {
                line,
                expected: cols.len(),
                found: f.len(),
            }
            .into());
        }
        let n_signal = f[1].parse().map_err(|_| parse_err(line, "invalid n_t"))?;
        let bars = levels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                Ok((
                    l,
                    parse_real(f[2 + 2 * i], line, "rejection rate")?,
                    parse_real(f[3 + 2 * i], line, "acceptance rate")?,
                ))
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        out.push(BarRow {
            axis_value: parse_real(f[0], line, "axis1")?,
            n_signal,
            bars,
        });
    }
    Ok(out)
}

pub fn read_boxes<T: Real>(path: impl AsRef<Path>) -> Result<Vec<BoxRow<T>>> {
    let text = std::fs::read_to_string(path)?;
    let file = split_text(&text);
    check_schema(&file.schema, BOXES_SCHEMA, true)?;
    let mut rows = file.rows.iter();
    match rows.next() {
        Some((_, h)) if fields(h).join(",") == BOX_COLUMNS => {}
        Some((line, _)) => return Err(parse_err(*line, format!("expected `{BOX_COLUMNS}`")).into()),
        None => {
            return Err(FormatError::TooFewRows {
                needed: 1,
                found: 0,
            }
            .into())
        }
    }
    rows.map(|&(line, row)| {
        let f = fields(row);
        if f.len() != 8 {
            return Err(FormatError::RaggedRow {
                line,
                expected: 8,
                found: f.len(),
            }
            .into());
        }
        let r = |i: usize| parse_real::<T>(f[i], line, "box value");
        Ok(BoxRow {
            axis_value: r(0)?,
            n_signal: f[1].parse().map_err(|_| parse_err(line, "invalid n_t"))?,
            mean: r(2)?,
            q25: r(3)?,
            q75: r(4)?,
            min: r(5)?,
            max: r(6)?,
            detected_mean: r(7)?,
        })
    })
    .collect()
}
