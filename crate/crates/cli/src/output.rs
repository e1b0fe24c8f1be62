use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use halfspace_core::asymptotics::io::{json_document, write_csv, ConfigEcho, Records};
use halfspace_core::asymptotics::FitResult;
use halfspace_core::Result;
use serde_json::Value;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "HALFSPACE_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Everything a command hands back for serialization.
pub struct Report {
    pub config: ConfigEcho,
    pub records: Records,
    /// JSON `rows`; built from `records` when absent.
    pub rows: Option<Value>,
    pub grid: Option<Value>,
    pub fit: Option<FitResult>,
}

impl Report {
    pub fn new(config: ConfigEcho, records: Records) -> Self {
        Report {
            config,
            records,
            rows: None,
            grid: None,
            fit: None,
        }
    }

    fn json_rows(&self) -> Value {
        if let Some(rows) = &self.rows {
            return rows.clone();
        }
        Value::Array(
            self.records
                .rows
                .iter()
                .map(|row| {
                    Value::Object(
                        self.records
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(k, v)| (k.to_string(), Value::String(v.clone())))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// `--output`, else `$HALFSPACE_OUT_DIR/<command>.<ext>`, else stdout.
pub fn destination(output: Option<&Path>, command: &str, format: Format) -> Option<PathBuf> {
    if let Some(p) = output {
        return Some(p.to_path_buf());
    }
    std::env::var_os(OUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(|d| PathBuf::from(d).join(format!("{command}.{}", format.extension())))
}

pub fn emit(report: &Report, format: Format, dest: Option<&Path>) -> Result<()> {
    let mut out: Box<dyn Write> = match dest {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match format {
        Format::Csv => write_csv(&mut out, &report.config, &report.records)?,
        Format::Json => {
            let doc = json_document(
                &report.config,
                report.json_rows(),
                report.grid.clone(),
                report.fit.as_ref(),
            )?;
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}
