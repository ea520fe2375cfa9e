//! Host buffer ingestion and export: raw little-endian binary (`.bin`)
//! and integer CSV (`.csv`), selected by file extension.

use crate::dataflow::Scalar;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BufError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: expected {expected} elements, found {found}")]
    WrongLength {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}: {detail}")]
    Malformed { path: String, detail: String },
    #[error("value {value} does not fit in {elem}")]
    Range { value: i64, elem: Scalar },
}

fn io_err(path: &Path, source: std::io::Error) -> BufError {
    BufError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a buffer of exactly `expected_len` elements. `.csv` files hold
/// integers separated by commas and newlines; anything else is raw
/// little-endian binary of the scalar type.
pub fn read_buffer(path: &Path, elem: Scalar, expected_len: usize) -> Result<Vec<i64>, BufError> {
    let values = if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        parse_csv(&text).map_err(|detail| BufError::Malformed {
            path: path.display().to_string(),
            detail,
        })?
    } else {
        let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
        decode_le(&bytes, elem).map_err(|detail| BufError::Malformed {
            path: path.display().to_string(),
            detail,
        })?
    };
    if values.len() != expected_len {
        return Err(BufError::WrongLength {
            path: path.display().to_string(),
            expected: expected_len,
            found: values.len(),
        });
    }
    Ok(values)
}

/// Writes raw little-endian binary.
pub fn write_buffer(path: &Path, elem: Scalar, values: &[i64]) -> Result<(), BufError> {
    let bytes = encode_le(values, elem)?;
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn parse_csv(text: &str) -> Result<Vec<i64>, String> {
    let mut values = Vec::new();
    for token in text.split([',', '\n', '\r']) {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        values.push(
            token
                .parse::<i64>()
                .map_err(|_| format!("`{token}` is not an integer"))?,
        );
    }
    Ok(values)
}

pub fn format_csv(values: &[i64], row_len: usize) -> String {
    let row_len = row_len.max(1);
    values
        .chunks(row_len)
        .map(|row| {
            row.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn decode_le(bytes: &[u8], elem: Scalar) -> Result<Vec<i64>, String> {
    let width = elem.bytes();
    if !bytes.len().is_multiple_of(width) {
        return Err(format!(
            "{} bytes is not a multiple of the {width}-byte element size",
            bytes.len()
        ));
    }
    Ok(bytes
        .chunks_exact(width)
        .map(|chunk| match elem {
            Scalar::I8 => chunk[0] as i8 as i64,
            Scalar::I16 => i16::from_le_bytes([chunk[0], chunk[1]]) as i64,
            Scalar::I32 => i32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as i64,
            Scalar::I64 => i64::from_le_bytes(chunk.try_into().expect("exact chunk")),
        })
        .collect())
}

pub fn encode_le(values: &[i64], elem: Scalar) -> Result<Vec<u8>, BufError> {
    let mut out = Vec::with_capacity(values.len() * elem.bytes());
    for &v in values {
        match elem {
            Scalar::I8 => {
                out.push(i8::try_from(v).map_err(|_| BufError::Range { value: v, elem })? as u8)
            }
            Scalar::I16 => out.extend(
                i16::try_from(v)
                    .map_err(|_| BufError::Range { value: v, elem })?
                    .to_le_bytes(),
            ),
            Scalar::I32 => out.extend(
                i32::try_from(v)
                    .map_err(|_| BufError::Range { value: v, elem })?
                    .to_le_bytes(),
            ),
            Scalar::I64 => out.extend(v.to_le_bytes()),
        }
    }
    Ok(out)
}
