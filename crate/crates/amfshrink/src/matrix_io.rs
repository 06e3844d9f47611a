//! Matrix files.
//!
//! Text: comma-separated, one row per line, complex entries written `re+imj`.
//! A file is complex as soon as one entry carries a `j`.
//!
//! Binary: the 8-byte magic `AMFSHRK1`, `u32` rows, `u32` cols, a `u8` field
//! tag (0 real, 1 complex), then the entries row-major as little-endian `f64`
//! (re, im pairs when complex).

use std::fs;
use std::path::Path;

use amfshrink_core::{CMatrix, Complex64, Field};
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"AMFSHRK1";
const HEADER_LEN: usize = 8 + 4 + 4 + 1;

#[derive(Debug, Error)]
pub enum MatrixIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a matrix file: magic bytes differ from AMFSHRK1")]
    BadMagic,
    #[error("truncated matrix file: need {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("matrix dimensions {rows}x{cols} overflow the addressable size")]
    DimensionOverflow { rows: u64, cols: u64 },
    #[error("unknown field tag {0}")]
    UnknownFieldTag(u8),
    #[error("{0} unexpected bytes after the last entry")]
    TrailingBytes(u64),
    #[error("line {line}, entry {entry}: cannot parse {text:?}")]
    Parse { line: usize, entry: usize, text: String },
    #[error("line {line}: expected {expected} entries, found {found}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("matrix has no entries")]
    Empty,
}

impl MatrixIoError {
    /// Stable short code per failure kind.
    pub fn code(&self) -> &'static str {
        match self {
            MatrixIoError::Io { .. } => "io",
            MatrixIoError::BadMagic => "bad-magic",
            MatrixIoError::Truncated { .. } => "truncated",
            MatrixIoError::DimensionOverflow { .. } => "dimension-overflow",
            MatrixIoError::UnknownFieldTag(_) => "field-tag",
            MatrixIoError::TrailingBytes(_) => "trailing-bytes",
            MatrixIoError::Parse { .. } => "parse",
            MatrixIoError::Ragged { .. } => "ragged",
            MatrixIoError::Empty => "empty",
        }
    }
}

pub type Result<T> = std::result::Result<T, MatrixIoError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Text,
    Binary,
}

impl MatrixFormat {
    /// `.bin` means binary, anything else text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("bin") => MatrixFormat::Binary,
            _ => MatrixFormat::Text,
        }
    }
}

/// A matrix together with the scalar field it lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixData {
    pub field: Field,
    pub data: CMatrix,
}

impl MatrixData {
    pub fn new(field: Field, data: CMatrix) -> Self {
        Self { field, data }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }
}

fn field_tag(field: Field) -> u8 {
    match field {
        Field::Real => 0,
        Field::Complex => 1,
    }
}

pub fn encode_binary(m: &MatrixData) -> Vec<u8> {
    let per_entry = if m.field == Field::Complex { 16 } else { 8 };
    let mut out = Vec::with_capacity(HEADER_LEN + per_entry * m.rows() * m.cols());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    out.push(field_tag(m.field));
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let z = m.data[(i, j)];
            out.extend_from_slice(&z.re.to_le_bytes());
            if m.field == Field::Complex {
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<MatrixData> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(MatrixIoError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(MatrixIoError::Truncated {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as u64;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as u64;
    let field = match bytes[16] {
        0 => Field::Real,
        1 => Field::Complex,
        tag => return Err(MatrixIoError::UnknownFieldTag(tag)),
    };
    let per_entry: u64 = if field == Field::Complex { 16 } else { 8 };
    let body = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(per_entry))
        .filter(|&b| b <= isize::MAX as u64 - HEADER_LEN as u64)
        .ok_or(MatrixIoError::DimensionOverflow { rows, cols })?;
    let expected = HEADER_LEN as u64 + body;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(MatrixIoError::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(MatrixIoError::TrailingBytes(actual - expected));
    }
    if rows == 0 || cols == 0 {
        return Err(MatrixIoError::Empty);
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut data = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re = values.next().expect("length checked");
            let im = if field == Field::Complex {
                values.next().expect("length checked")
            } else {
                0.0
            };
            data[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(MatrixData { field, data })
}

fn format_entry(z: Complex64, field: Field) -> String {
    match field {
        Field::Real => format!("{:?}", z.re),
        Field::Complex => {
            let sign = if z.im.is_sign_negative() { '-' } else { '+' };
            format!("{:?}{}{:?}j", z.re, sign, z.im.abs())
        }
    }
}

pub fn format_text(m: &MatrixData) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format_entry(m.data[(i, j)], m.field)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses `1.5`, `2j`, `1+2j`, `-1e-3-4.5j`, ...; the boolean is true when
/// the entry had an imaginary part.
pub fn parse_entry(text: &str) -> Option<(Complex64, bool)> {
    let s = text.trim();
    let Some(body) = s.strip_suffix(['j', 'J']) else {
        return s.parse::<f64>().ok().map(|re| (Complex64::new(re, 0.0), false));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse::<f64>().ok()?, body[k..].parse::<f64>().ok()?),
        None => (0.0, body.parse::<f64>().ok()?),
    };
    Some((Complex64::new(re, im), true))
}

pub fn parse_text(text: &str) -> Result<MatrixData> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut complex = false;
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (entry, token) in line.split(',').enumerate() {
            let (z, imaginary) = parse_entry(token).ok_or_else(|| MatrixIoError::Parse {
                line: index + 1,
                entry: entry + 1,
                text: token.trim().to_string(),
            })?;
            complex |= imaginary;
            row.push(z);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(MatrixIoError::Ragged {
                    line: index + 1,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MatrixIoError::Empty);
    }
    let (r, c) = (rows.len(), rows[0].len());
    let data = CMatrix::from_fn(r, c, |i, j| rows[i][j]);
    Ok(MatrixData {
        field: if complex { Field::Complex } else { Field::Real },
        data,
    })
}

/// Reads either format; binary is recognized by its magic bytes.
pub fn read_matrix(path: &Path) -> Result<MatrixData> {
    let bytes = fs::read(path).map_err(|source| MatrixIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if bytes.starts_with(MAGIC) || MatrixFormat::from_path(path) == MatrixFormat::Binary {
        return decode_binary(&bytes);
    }
    let text = String::from_utf8(bytes).map_err(|_| MatrixIoError::Parse {
        line: 0,
        entry: 0,
        text: "<not utf-8>".into(),
    })?;
    parse_text(&text)
}

pub fn write_matrix(m: &MatrixData, path: &Path, format: MatrixFormat) -> Result<()> {
    let bytes = match format {
        MatrixFormat::Binary => encode_binary(m),
        MatrixFormat::Text => format_text(m).into_bytes(),
    };
    fs::write(path, bytes).map_err(|source| MatrixIoError::Io {
        path: path.display().to_string(),
        source,
    })
}
