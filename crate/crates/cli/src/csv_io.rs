//! Single-column series files and plot-ready matrices.
//!
//! Output is RFC 4180 style with LF line endings; numbers use Rust's
//! shortest round-trip formatting, so a written series reads back exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use spindle_core::TimeSeries;

use crate::error::{input, CliError, Result};

/// Shortest series accepted from a file.
pub const MIN_SERIES_LEN: usize = 32;

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Parses one numeric column with an optional `value` header line.
pub fn parse_series<R: Read>(reader: R) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| input(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        if record.len() != 1 {
            return Err(input(format!(
                "line {line}: expected one column, found {}",
                record.len()
            )));
        }
        let cell = &record[0];
        if row == 0 && cell == "value" {
            continue;
        }
        let v: f64 = cell
            .parse()
            .map_err(|_| input(format!("line {line}: cannot parse {cell:?} as a number")))?;
        if !v.is_finite() {
            return Err(input(format!("line {line}: non-finite value {cell:?}")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(input("empty series"));
    }
    if values.len() < MIN_SERIES_LEN {
        return Err(input(format!(
            "series too short: {} samples, need at least {MIN_SERIES_LEN}",
            values.len()
        )));
    }
    Ok(TimeSeries::new(values)?)
}

pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_series(file)
}

pub fn write_series<W: Write>(w: W, x: &TimeSeries) -> Result<()> {
    let mut out = csv_writer(w);
    write_row(&mut out, ["value"])?;
    for v in x.values() {
        write_row(&mut out, [v.to_string()])?;
    }
    flush(out)
}

pub(crate) fn write_row<W, I, T>(out: &mut csv::Writer<W>, row: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    out.write_record(row)
        .map_err(|e| input(format!("writing CSV: {e}")))
}

pub(crate) fn flush<W: Write>(mut out: csv::Writer<W>) -> Result<()> {
    out.flush().map_err(|e| input(format!("writing CSV: {e}")))
}
