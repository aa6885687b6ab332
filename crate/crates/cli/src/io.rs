//! CSV ingestion and emission.
//!
//! Input files carry a header of either `time,price` or `time,level`. Prices
//! are converted to log levels against the first price; levels are taken as
//! is. Output CSV floats use `{:.16e}` so re-ingesting loses nothing.

use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;
use voldiag_core::report::InputDescriptor;
use voldiag_core::series::{LevelSeries, PriceSeries, Reference};
use voldiag_core::{Error, Result};

pub struct LoadedInput {
    pub series: LevelSeries,
    pub descriptor: InputDescriptor,
}

fn parse_field(raw: &str, what: &str, line: u64) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        Error::Format(format!("line {line}: cannot parse {what} value {raw:?}"))
    })
}

/// Reads a `time,price` or `time,level` CSV into a level series, recording
/// the file digest and row count. `step_override` replaces the step inferred
/// from the first two timestamps.
pub fn read_input(path: &Path, step_override: Option<f64>) -> Result<LoadedInput> {
    let bytes = fs::read(path).map_err(|e| {
        Error::Format(format!("cannot read {}: {e}", path.display()))
    })?;
    let digest = format!("sha256:{:x}", Sha256::digest(&bytes));

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("cannot read header: {e}")))?
        .clone();
    let cols: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    let is_price = match cols.as_slice() {
        [t, v] if t == "time" && v == "price" => true,
        [t, v] if t == "time" && v == "level" => false,
        _ => {
            return Err(Error::Format(format!(
                "expected header 'time,price' or 'time,level', got {:?}",
                headers.iter().collect::<Vec<_>>()
            )))
        }
    };

    let mut times: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::Format(format!("malformed row: {e}")))?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(times.len() as u64 + 2);
        if record.len() != 2 {
            return Err(Error::Format(format!(
                "line {line}: expected 2 fields, got {}",
                record.len()
            )));
        }
        let t = parse_field(&record[0], "time", line)?;
        if let Some(&prev) = times.last() {
            if !(t > prev) {
                return Err(Error::Format(format!(
                    "line {line}: time {t} does not increase past {prev}"
                )));
            }
        }
        let v = parse_field(&record[1], cols[1].as_str(), line)?;
        if is_price && !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!(
                "line {line}: price must be positive and finite, got {v}"
            )));
        }
        if !is_price && !v.is_finite() {
            return Err(Error::Format(format!(
                "line {line}: level must be finite, got {v}"
            )));
        }
        times.push(t);
        values.push(v);
    }
    let rows = values.len();
    if rows < 2 {
        return Err(Error::Size(format!(
            "need at least 2 data rows, got {rows}"
        )));
    }

    let step = match step_override {
        Some(s) => s,
        None => times[1] - times[0],
    };
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Format(format!(
            "timestamps must advance by a positive step, inferred {step}"
        )));
    }

    let series = if is_price {
        PriceSeries::new(times, values, step)?.log_returns(Reference::First)?
    } else {
        for (k, &t) in times.iter().enumerate() {
            let expected = times[0] + k as f64 * step;
            if (t - expected).abs() > 0.1 * step {
                return Err(Error::Format(format!(
                    "line {}: timestamp {t} is off the uniform grid \
                     (expected {expected})",
                    k + 2
                )));
            }
        }
        LevelSeries::new(times[0], step, values, false)?
    };

    Ok(LoadedInput {
        series,
        descriptor: InputDescriptor {
            source: path.display().to_string(),
            digest,
            rows,
        },
    })
}

/// Writes a level series as a `time,level` CSV.
pub fn write_levels_csv(path: &Path, series: &LevelSeries) -> Result<()> {
    let mut out = String::with_capacity(series.len() * 48);
    out.push_str("time,level\n");
    for (k, v) in series.values().iter().enumerate() {
        out.push_str(&format!("{:.16e},{:.16e}\n", series.time_at(k), v));
    }
    fs::write(path, out)
        .map_err(|e| Error::Format(format!("cannot write {}: {e}", path.display())))
}

/// One figure-ready dataset: a header, rows of floats, and a description for
/// the manifest.
pub struct PlotFile {
    pub name: String,
    pub description: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

/// Writes each dataset as `<dir>/<name>.csv` plus a `manifest.csv` listing
/// every emitted file exactly once with its columns and description.
pub fn emit_plot_files(dir: &Path, files: &[PlotFile]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::Format(format!("cannot create {}: {e}", dir.display()))
    })?;
    let mut manifest = String::from("file,columns,description\n");
    for f in files {
        let mut out = String::new();
        out.push_str(&f.columns.join(","));
        out.push('\n');
        for row in &f.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        let file_name = format!("{}.csv", f.name);
        fs::write(dir.join(&file_name), out).map_err(|e| {
            Error::Format(format!("cannot write {file_name}: {e}"))
        })?;
        manifest.push_str(&format!(
            "{file_name},{},{}\n",
            f.columns.join(";"),
            f.description
        ));
    }
    fs::write(dir.join("manifest.csv"), manifest).map_err(|e| {
        Error::Format(format!("cannot write manifest: {e}"))
    })
}
