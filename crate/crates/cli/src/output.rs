use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::Failure;

/// 17 significant digits, enough to read back the same double.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn io_failure(path: Option<&Path>, e: impl std::fmt::Display) -> Failure {
    match path {
        Some(p) => Failure::Computation(format!("{}: {e}", p.display())),
        None => Failure::Computation(format!("stdout: {e}")),
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_failure(Some(p), e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_csv(
    path: Option<&Path>,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    w.write_record(header).map_err(|e| io_failure(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_failure(path, e))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(path, e))
}
