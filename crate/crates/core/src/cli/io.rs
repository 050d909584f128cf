//! CSV and JSON input and output.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::Sample;

fn csv_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Csv { path: path.to_path_buf(), line, message: message.into() }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Reads a sample from a CSV file whose header names the columns `x` and
/// `y` (in either order). Row order is preserved.
pub fn load_sample_csv(path: &Path) -> Result<Sample> {
    let file = fs::File::open(path).map_err(io_error(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| csv_error(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (ix, iy) = match (col("x"), col("y")) {
        (Some(ix), Some(iy)) if header.len() == 2 => (ix, iy),
        _ if header.len() > 2 => {
            return Err(csv_error(path, 1, format!("unexpected column in header {header:?}; expected x,y")))
        }
        _ => return Err(csv_error(path, 1, format!("header {header:?} must name the columns x,y"))),
    };

    let mut x = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() > 2 {
            return Err(csv_error(path, line, format!("unexpected column: {} fields, expected 2", record.len())));
        }
        if record.len() < 2 {
            return Err(csv_error(path, line, format!("missing column: {} field(s), expected 2", record.len())));
        }
        let parse = |i: usize| -> Result<f64> {
            let field = record[i].trim();
            let v: f64 =
                field.parse().map_err(|_| csv_error(path, line, format!("cannot parse '{field}' as a number")))?;
            if !v.is_finite() {
                return Err(csv_error(path, line, format!("non-finite value '{field}'")));
            }
            Ok(v)
        };
        x.push(parse(ix)?);
        y.push(parse(iy)?);
    }
    if x.is_empty() {
        return Err(Error::InvalidSample(format!("{} has no data rows", path.display())));
    }
    Sample::new(x, y)
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_error(dir))
}

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
        other => csv_error(path, 0, format!("{other:?}")),
    })?;
    let fail = |e: csv::Error| csv_error(path, 0, e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row.iter().map(|s| s.as_ref())).map_err(fail)?;
    }
    w.flush().map_err(io_error(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_error(path))
}
