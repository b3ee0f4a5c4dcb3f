//! Numeric CSV files: one observation per row, optional header line.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub data: DMatrix<f64>,
}

/// Reads a comma-separated numeric table. A first line containing any
/// non-numeric field is taken as the header.
pub fn read_csv<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Malformed(e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let fields: Vec<&str> = record.iter().collect();
        if line == 0 && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            header = Some(fields.iter().map(|s| s.to_string()).collect());
            width = Some(fields.len());
            continue;
        }
        if let Some(w) = width {
            if fields.len() != w {
                return Err(Error::Malformed(format!("row {} has {} fields, expected {w}", line + 1, fields.len())));
            }
        }
        width = Some(fields.len());
        let row = fields
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    row: line + 1,
                    column: j + 1,
                    value: f.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let p = rows[0].len();
    Ok(Table { header, data: DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]) })
}

pub fn read_csv_path(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Malformed(format!("cannot open {}: {e}", path.display())))?;
    read_csv(std::io::BufReader::new(file))
}

/// Writes `m` with the shortest decimal representation that reads back to
/// the same `f64`.
pub fn write_matrix<W: Write>(writer: W, m: &DMatrix<f64>, header: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if let Some(h) = header {
        w.write_record(h).map_err(csv_error)?;
    }
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes `rows` as CSV with a header derived from their field names.
pub fn write_records<W: Write, T: serde::Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Malformed(format!("{other:?}")),
    }
}
