//! CSV and JSON serialization of sweep tables and fits.
//!
//! CSV files start with `#` comment lines carrying the version string and the
//! resolved configuration, then a header row and one row per record. Floats
//! are written with 17 significant digits.

use std::io::{Read, Write};

use serde_json::{json, Value};

use super::{FitResult, SweepTable};
use crate::error::{Error, Result};
use crate::VERSION;

/// Resolved configuration as ordered `key = value` pairs.
pub type ConfigEcho = Vec<(String, String)>;

/// `x` with 17 significant digits; empty for NaN and missing values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Version line followed by one line per configuration entry.
pub fn comment_lines(config: &ConfigEcho) -> Vec<String> {
    std::iter::once(format!("# {VERSION}"))
        .chain(config.iter().map(|(k, v)| format!("# {k} = {v}")))
        .collect()
}

/// A header row and string records.
#[derive(Debug, Clone, PartialEq)]
pub struct Records {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub fn write_csv<W: Write>(mut out: W, config: &ConfigEcho, records: &Records) -> Result<()> {
    for line in comment_lines(config) {
        writeln!(out, "{line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&records.columns)?;
    for row in &records.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_records(table: &SweepTable) -> Records {
    Records {
        columns: vec![
            "r",
            "E",
            "E_h_grid",
            "W",
            "gap",
            "iterations",
            "residual",
            "n_xi",
            "n_rho",
            "h_xi",
            "h_rho",
            "status",
            "message",
        ],
        rows: table
            .rows
            .iter()
            .map(|row| {
                vec![
                    fmt_f64(row.r),
                    fmt_opt(row.energy),
                    fmt_opt(row.reference),
                    fmt_opt(row.w),
                    fmt_opt(row.gap),
                    row.iterations.to_string(),
                    fmt_f64(row.residual),
                    row.n_xi.to_string(),
                    row.n_rho.to_string(),
                    fmt_f64(row.h_xi),
                    fmt_f64(row.h_rho),
                    serde_json::to_value(&row.status)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        .unwrap_or_default(),
                    row.message.clone(),
                ]
            })
            .collect(),
    }
}

/// One row per fitted point with the fitted value and residual.
pub fn fit_records(points: &[(f64, f64)], fit: &FitResult) -> Records {
    Records {
        columns: vec!["r", "W", "fit", "residual"],
        rows: points
            .iter()
            .zip(&fit.residuals)
            .map(|((r, w), res)| {
                vec![
                    fmt_f64(*r),
                    fmt_f64(*w),
                    fmt_f64(fit.eval(*r)),
                    fmt_f64(*res),
                ]
            })
            .collect(),
    }
}

/// Coefficients of a fit as configuration-style entries for the header.
pub fn fit_summary(fit: &FitResult) -> ConfigEcho {
    let mut out: ConfigEcho = fit
        .exponents
        .iter()
        .zip(&fit.coefficients)
        .map(|(k, c)| (format!("c{k}"), fmt_f64(*c)))
        .collect();
    out.push(("condition".into(), fmt_f64(fit.condition)));
    out.push(("orthogonality".into(), fmt_f64(fit.orthogonality)));
    out.push(("r_min".into(), fmt_f64(fit.r_min)));
    out.push(("r_max".into(), fmt_f64(fit.r_max)));
    out
}

/// `(r, W)` pairs from a CSV with columns `r` and `W`; rows without `W` are
/// skipped.
pub fn read_points_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("missing column `{name}`"),
            })
    };
    let (ir, iw) = (col("r")?, col("W")?);
    let mut points = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k + 2, |p| p.line() as usize);
        let parse = |i: usize| -> Result<Option<f64>> {
            let s = rec.get(i).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|e| Error::Parse {
                line,
                msg: format!("`{s}`: {e}"),
            })
        };
        if let (Some(r), Some(w)) = (parse(ir)?, parse(iw)?) {
            points.push((r, w));
        }
    }
    Ok(points)
}

/// `{version, config, rows, grid, fit}`.
pub fn json_document(
    config: &ConfigEcho,
    rows: Value,
    grid: Option<Value>,
    fit: Option<&FitResult>,
) -> Result<Value> {
    let cfg: serde_json::Map<String, Value> = config
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    Ok(json!({
        "version": VERSION,
        "config": cfg,
        "rows": rows,
        "grid": grid.unwrap_or(Value::Null),
        "fit": match fit {
            Some(f) => serde_json::to_value(f)?,
            None => Value::Null,
        },
    }))
}

pub fn sweep_json(
    config: &ConfigEcho,
    table: &SweepTable,
    fit: Option<&FitResult>,
) -> Result<Value> {
    json_document(
        config,
        serde_json::to_value(&table.rows)?,
        Some(json!({
            "h_xi": table.grid.h_xi,
            "h_rho": table.grid.h_rho,
            "L_xi": table.grid.l_xi,
            "L_rho": table.grid.l_rho,
            "m": table.m,
            "tol": table.tol,
            "seed": table.seed,
        })),
        fit,
    )
}
