//! Dense matrix and vector files.
//!
//! * CSV: header-free, one matrix row per line, comma separated. Vectors are
//!   written one value per line; any comma/newline layout is accepted on read.
//! * MDOP binary: 16-byte header (`b"MDOP"`, `u32` rows, `u32` cols,
//!   `u32` reserved = 0, all little-endian) followed by `rows * cols`
//!   little-endian `f64` values in column-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use morozov_core::LinearOperator;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MDOP_MAGIC: &[u8; 4] = b"MDOP";
pub const MDOP_HEADER_LEN: usize = 16;

pub fn encode_mdop(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(MDOP_HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MDOP_MAGIC);
    out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    // nalgebra storage is column-major already
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_mdop(bytes: &[u8]) -> std::result::Result<DMatrix<f64>, String> {
    if bytes.len() < MDOP_HEADER_LEN {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[0..4] != MDOP_MAGIC {
        return Err("bad magic, expected \"MDOP\"".into());
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap()) as usize;
    let (rows, cols) = (word(4), word(8));
    if rows == 0 || cols == 0 {
        return Err(format!("empty matrix {rows}x{cols}"));
    }
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or("matrix size overflows")?;
    let body = &bytes[MDOP_HEADER_LEN..];
    if body.len() != expected {
        return Err(format!(
            "payload has {} bytes, {rows}x{cols} needs {expected}",
            body.len()
        ));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_vec(rows, cols, values))
}

pub fn write_mdop(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, encode_mdop(m)).map_err(|e| Error::io(path, e))
}

pub fn read_mdop(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_mdop(&bytes).map_err(|m| Error::format(path, m))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })
}

fn parse_field(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|e| Error::format(path, format!("line {line}: {field:?}: {e}")))
}

pub fn read_csv_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in csv_reader(path)?.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })?;
        let row = record
            .iter()
            .filter(|f| !f.is_empty())
            .map(|f| parse_field(path, i + 1, f))
            .collect::<Result<Vec<_>>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::format(path, "empty matrix"));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::format(
            path,
            format!("row {} has {} entries, expected {cols}", i + 1, r.len()),
        ));
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        cols,
        rows.into_iter().flatten(),
    ))
}

pub fn write_csv_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|source| Error::Csv {
                path: path.into(),
                source,
            })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv_vector(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, record) in csv_reader(path)?.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })?;
        for f in record.iter().filter(|f| !f.is_empty()) {
            out.push(parse_field(path, i + 1, f)?);
        }
    }
    if out.is_empty() {
        return Err(Error::format(path, "empty vector"));
    }
    Ok(out)
}

pub fn write_csv_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::with_capacity(24 * v.len());
    for x in v {
        text.push_str(&x.to_string());
        text.push('\n');
    }
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Loads a dense operator, choosing the format from the extension
/// (`.bin` for MDOP, anything else is read as CSV).
pub fn read_operator(path: &Path) -> Result<LinearOperator> {
    let m = match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_mdop(path)?,
        _ => read_csv_matrix(path)?,
    };
    Ok(LinearOperator::dense(m)?)
}
