//! Power-law fits of result tables.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use sense_core::fit::{fit_power_law, PowerLawFit};

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub x: String,
    pub y: String,
    /// Fit every row instead of the per-`x` means.
    pub raw: bool,
    /// Defaults to `<table stem>.analysis.txt` next to the table.
    pub analysis: Option<PathBuf>,
}

/// Default analysis file for a results table.
pub fn analysis_path(table: &Path) -> PathBuf {
    let stem = table
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    table.with_file_name(format!("{stem}.analysis.txt"))
}

/// Reads two numeric columns, skipping `#` lines and rows with an empty
/// cell in either column.
pub fn read_columns(table: &Path, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(table)
        .with_context(|| format!("cannot read {}", table.display()))?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            let available: Vec<&str> = headers.iter().collect();
            anyhow!(
                "column `{name}` not found in {} (have: {})",
                table.display(),
                available.join(", ")
            )
        })
    };
    let (ix, iy) = (find(x)?, find(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let (sx, sy) = (record.get(ix).unwrap_or(""), record.get(iy).unwrap_or(""));
        if sx.is_empty() || sy.is_empty() {
            continue;
        }
        let parse = |s: &str, col: &str| {
            s.parse::<f64>()
                .with_context(|| format!("row {}: column `{col}` is not numeric: {s:?}", line + 1))
        };
        xs.push(parse(sx, x)?);
        ys.push(parse(sy, y)?);
    }
    Ok((xs, ys))
}

/// Means of `ys` over rows sharing the same `x`, in increasing `x`.
pub fn group_means(xs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gx: Vec<f64> = Vec::new();
    let mut gy: Vec<f64> = Vec::new();
    let mut count = 0.0;
    for (x, y) in pairs {
        if gx.last() == Some(&x) {
            *gy.last_mut().unwrap() += y;
            count += 1.0;
        } else {
            if let Some(last) = gy.last_mut() {
                *last /= count;
            }
            gx.push(x);
            gy.push(y);
            count = 1.0;
        }
    }
    if let Some(last) = gy.last_mut() {
        *last /= count;
    }
    (gx, gy)
}

/// Fits `y = prefactor · x^slope` and appends the result to the analysis
/// file.
pub fn fit(table: &Path, opts: &FitOptions) -> Result<(PowerLawFit, PathBuf)> {
    let (xs, ys) = read_columns(table, &opts.x, &opts.y)?;
    if xs.is_empty() {
        bail!("no rows with both `{}` and `{}` in {}", opts.x, opts.y, table.display());
    }
    let (fx, fy) = if opts.raw { (xs, ys) } else { group_means(&xs, &ys) };
    let result = fit_power_law(&fx, &fy).with_context(|| format!("fitting `{}` against `{}`", opts.y, opts.x))?;
    let path = opts.analysis.clone().unwrap_or_else(|| analysis_path(table));
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    writeln!(
        file,
        "table={} x={} y={} mode={} points={} slope={} slope_stderr={} prefactor={}",
        table.display(),
        opts.x,
        opts.y,
        if opts.raw { "raw" } else { "mean" },
        result.points,
        result.exponent,
        result.exponent_stderr,
        result.prefactor
    )?;
    Ok((result, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicates_are_averaged() {
        let (x, y) = group_means(&[2.0, 1.0, 2.0, 1.0, 3.0], &[4.0, 1.0, 6.0, 3.0, 7.0]);
        assert_eq!(x, [1.0, 2.0, 3.0]);
        assert_eq!(y, [2.0, 5.0, 7.0]);
    }
}
