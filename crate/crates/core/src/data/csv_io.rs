use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{CalibrationDataset, CalibrationRecord};
use crate::error::{Error, Result};
use crate::fmt_f64;

const COLUMNS: [&str; 4] = ["voltage", "air_temp", "wind_speed", "run_id"];

/// Reads a calibration CSV (`voltage,air_temp,wind_speed,run_id`).
///
/// Lines starting with `#` are ignored. Row numbers in diagnostics are
/// 1-based physical line numbers.
pub fn load_csv(path: impl AsRef<Path>) -> Result<CalibrationDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: format!("cannot open: {e}"),
    })?;
    parse_csv(file, path)
}

pub fn parse_csv(reader: impl Read, source: &Path) -> Result<CalibrationDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let schema = |message: String| Error::Schema {
        path: PathBuf::from(source),
        message,
    };
    let headers = rdr
        .headers()
        .map_err(|e| schema(format!("unreadable header: {e}")))?
        .clone();
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema(format!("missing column '{name}'")))?;
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            column: String::new(),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let num = |col: usize| -> Result<f64> {
            let cell = row.get(idx[col]).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                column: COLUMNS[col].to_string(),
                message: format!("cannot parse '{cell}' as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    column: COLUMNS[col].to_string(),
                    message: format!("non-finite value '{cell}'"),
                });
            }
            Ok(v)
        };
        let voltage = num(0)?;
        let air_temp = num(1)?;
        let wind_speed = num(2)?;
        if wind_speed < 0.0 {
            return Err(Error::Parse {
                row: line,
                column: COLUMNS[2].to_string(),
                message: format!("negative wind speed {wind_speed}"),
            });
        }
        let run_id = row.get(idx[3]).unwrap_or("").to_string();
        if run_id.is_empty() {
            return Err(Error::Parse {
                row: line,
                column: COLUMNS[3].to_string(),
                message: "empty run id".into(),
            });
        }
        records.push(CalibrationRecord {
            voltage,
            air_temp,
            wind_speed,
            run_id,
        });
    }
    let label = source.file_name().map_or_else(
        || source.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    Ok(CalibrationDataset::new(records, label))
}

pub fn save_csv(dataset: &CalibrationDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(dataset, &mut file).map_err(|e| Error::io(path, e))
}

/// Writes the dataset with 17 significant digits per value.
pub fn write_csv(dataset: &CalibrationDataset, out: &mut impl Write) -> std::io::Result<()> {
    if !dataset.provenance.is_empty() {
        for line in dataset.provenance.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    writeln!(out, "{}", COLUMNS.join(","))?;
    for r in &dataset.records {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(r.voltage),
            fmt_f64(r.air_temp),
            fmt_f64(r.wind_speed),
            r.run_id
        )?;
    }
    out.flush()
}
