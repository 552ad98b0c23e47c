//! CSV and plot-data formats.

use std::io::{BufRead, Write};

use crate::asymptotics::SweepRecord;
use crate::error::{Error, Result};

pub const SWEEP_HEADER: &str = "eps,j,lambda_2d,lambda_Q,scaled_residual_2d,scaled_Q,mu_ref,eigfun_dist";

/// Line prefix marking a sweep that stopped early.
pub const INCOMPLETE_MARKER: &str = "# incomplete:";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut w: W) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.eps),
            r.j,
            fmt_f64(r.lambda_2d),
            fmt_f64(r.lambda_q),
            fmt_f64(r.scaled_residual_2d),
            fmt_f64(r.scaled_q),
            fmt_f64(r.mu_ref),
            r.eigfun_dist.map(fmt_f64).unwrap_or_default()
        )?;
    }
    Ok(())
}

fn field<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: cannot parse {name} from {s:?}")))
}

/// Parse a sweep CSV; `#` lines are skipped. Per-level columns are not part
/// of the format and come back as NaN.
pub fn read_sweep_csv<R: BufRead>(r: R) -> Result<Vec<SweepRecord>> {
    let mut out = Vec::new();
    let mut header_seen = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line.trim() != SWEEP_HEADER {
                return Err(Error::Config(format!("line {n}: unexpected header {line:?}")));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(Error::Config(format!("line {n}: expected 8 columns, got {}", cols.len())));
        }
        out.push(SweepRecord {
            eps: field(cols[0], "eps", n)?,
            j: field(cols[1], "j", n)?,
            lambda_2d: field(cols[2], "lambda_2d", n)?,
            lambda_q: field(cols[3], "lambda_Q", n)?,
            scaled_residual_2d: field(cols[4], "scaled_residual_2d", n)?,
            scaled_q: field(cols[5], "scaled_Q", n)?,
            mu_ref: field(cols[6], "mu_ref", n)?,
            eigfun_dist: if cols[7].trim().is_empty() {
                None
            } else {
                Some(field(cols[7], "eigfun_dist", n)?)
            },
            lambda_2d_levels: [f64::NAN; 2],
            lambda_q_levels: [f64::NAN; 2],
        });
    }
    if !header_seen {
        return Err(Error::Config("missing sweep header".into()));
    }
    Ok(out)
}

/// Generic CSV with a header row and float columns.
pub fn write_table<W: Write>(mut w: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Plot polyline: a `#` title line, then `log(x) log(y)` pairs; points with
/// nonpositive coordinates are skipped.
pub fn write_loglog<W: Write>(mut w: W, title: &str, xs: &[f64], ys: &[f64]) -> Result<()> {
    writeln!(w, "# {title}")?;
    writeln!(w, "# log_eps log_error")?;
    for (x, y) in xs.iter().zip(ys) {
        if *x > 0.0 && *y > 0.0 {
            writeln!(w, "{} {}", fmt_f64(x.ln()), fmt_f64(y.ln()))?;
        }
    }
    Ok(())
}
