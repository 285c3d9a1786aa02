//! Rate-exponent fitting over simulate CSVs for the `rates` subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::risk::{rate_fit, RateFit};

/// One group's fit (or the reason it could not be fit).
#[derive(Debug)]
pub struct GroupRate {
    pub key: String,
    pub outcome: std::result::Result<RateFit, String>,
}

/// Reads a simulate CSV, groups rows by the requested columns, and fits
/// `ln risk_mean` against `ln n` within each group. Error rows (empty
/// risk_mean) are skipped; degenerate groups are reported, not fatal.
pub fn run_rates(input: &Path, group_keys: &str) -> Result<Vec<GroupRate>> {
    let keys: Vec<&str> = group_keys
        .split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .collect();
    if keys.is_empty() {
        return Err(Error::config("group keys must name at least one column"));
    }
    let mut reader = csv::Reader::from_path(input).map_err(|e| Error::Io {
        path: input.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| read_error(input, e))?
        .clone();
    let column = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::config(format!(
                "column \"{name}\" not found in {}",
                input.display()
            ))
        })
    };
    let key_cols: Vec<usize> = keys
        .iter()
        .map(|k| column(k))
        .collect::<Result<Vec<_>>>()?;
    let n_col = column("n")?;
    let risk_col = column("risk_mean")?;

    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| read_error(input, e))?;
        let risk_text = record.get(risk_col).unwrap_or("");
        if risk_text.is_empty() {
            continue;
        }
        let n: f64 = record
            .get(n_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::config(format!("unparseable n in {}", input.display())))?;
        let risk: f64 = risk_text
            .parse()
            .map_err(|_| Error::config(format!("unparseable risk_mean in {}", input.display())))?;
        let key = key_cols
            .iter()
            .map(|&c| record.get(c).unwrap_or(""))
            .collect::<Vec<_>>()
            .join("|");
        groups.entry(key).or_insert_with(Vec::new).push((n, risk));
    }
    if groups.is_empty() {
        return Err(Error::config("no usable rows to fit"));
    }
    Ok(groups
        .into_iter()
        .map(|(key, points)| GroupRate {
            key,
            outcome: rate_fit(&points).map_err(|e| e.to_string()),
        })
        .collect())
}

/// Renders the fits as stable text lines.
pub fn format_rates(rates: &[GroupRate]) -> String {
    let mut out = String::new();
    for rate in rates {
        match &rate.outcome {
            Ok(fit) => out.push_str(&format!(
                "group={} slope={:.4} intercept={:.4} r2={:.4} points={}\n",
                rate.key,
                fit.slope,
                fit.intercept,
                fit.r2,
                fit.points.len()
            )),
            Err(reason) => out.push_str(&format!("group={} degenerate: {reason}\n", rate.key)),
        }
    }
    out
}

/// Writes the fits as a small CSV.
pub fn write_rates_csv(rates: &[GroupRate], out: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    writer
        .write_record(["group", "slope", "intercept", "r2", "points"])
        .map_err(|e| write_error(out, e))?;
    for rate in rates {
        match &rate.outcome {
            Ok(fit) => writer
                .write_record([
                    rate.key.clone(),
                    format!("{}", fit.slope),
                    format!("{}", fit.intercept),
                    format!("{}", fit.r2),
                    fit.points.len().to_string(),
                ])
                .map_err(|e| write_error(out, e))?,
            Err(reason) => writer
                .write_record([
                    rate.key.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    reason.clone(),
                ])
                .map_err(|e| write_error(out, e))?,
        }
    }
    writer.flush().map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })
}

fn read_error(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    }
}

fn write_error(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    }
}
