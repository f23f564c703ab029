//! GTF1 grid files.
//!
//! Layout: `"GTF1"`, dtype `u8` (0 = u8 mask, 1 = f32), ndim `u8` (2 or 3),
//! reserved `u16` = 0, then `ndim` little-endian `u32` extents ordered
//! `[depth,] height, width`, then the row-major little-endian payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, GridShape, ScalarField};

const MAGIC: &[u8; 4] = b"GTF1";
const DTYPE_U8: u8 = 0;
const DTYPE_F32: u8 = 1;

/// Decoded GTF payload.
#[derive(Debug, Clone, PartialEq)]
pub enum GtfData {
    Mask(BinaryMask),
    Field(ScalarField),
}

fn header(dtype: u8, shape: GridShape) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * shape.ndim());
    out.extend_from_slice(MAGIC);
    out.push(dtype);
    out.push(shape.ndim() as u8);
    out.extend_from_slice(&0u16.to_le_bytes());
    for &d in shape.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out
}

pub fn encode_mask(mask: &BinaryMask) -> Vec<u8> {
    let mut out = header(DTYPE_U8, mask.shape());
    out.extend((0..mask.shape().len()).map(|s| mask.get(s) as u8));
    out
}

pub fn encode_field(field: &ScalarField) -> Vec<u8> {
    let mut out = header(DTYPE_F32, field.shape());
    out.reserve(4 * field.shape().len());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a GTF1 byte buffer; `path` only labels errors.
pub fn decode(bytes: &[u8], path: &Path) -> Result<GtfData> {
    let fail = |offset: usize, reason: String| Error::format(path, offset as u64, reason);
    if bytes.len() < 8 {
        return Err(fail(bytes.len(), "truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail(0, format!("bad magic {:?}, expected \"GTF1\"", &bytes[0..4])));
    }
    let dtype = bytes[4];
    if dtype != DTYPE_U8 && dtype != DTYPE_F32 {
        return Err(fail(4, format!("unknown dtype {dtype}")));
    }
    let ndim = bytes[5] as usize;
    if ndim != 2 && ndim != 3 {
        return Err(fail(5, format!("ndim {ndim} not in {{2, 3}}")));
    }
    if bytes[6] != 0 || bytes[7] != 0 {
        return Err(fail(6, "reserved field is not zero".into()));
    }
    let dims_end = 8 + 4 * ndim;
    if bytes.len() < dims_end {
        return Err(fail(bytes.len(), "truncated extents".into()));
    }
    let dims: Vec<usize> = bytes[8..dims_end]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let shape = GridShape::new(&dims).map_err(|e| fail(8, e.to_string()))?;
    let width = if dtype == DTYPE_U8 { 1 } else { 4 };
    let expected = dims_end + width * shape.len();
    if bytes.len() != expected {
        return Err(fail(
            bytes.len().min(expected),
            format!(
                "payload is {} bytes, extents {shape} need {}",
                bytes.len() - dims_end,
                expected - dims_end
            ),
        ));
    }
    let payload = &bytes[dims_end..];
    if dtype == DTYPE_U8 {
        let mut mask = BinaryMask::new(shape);
        for (s, &b) in payload.iter().enumerate() {
            match b {
                0 => {}
                1 => mask.set(s, true),
                _ => return Err(fail(dims_end + s, format!("mask byte {b} is not 0 or 1"))),
            }
        }
        Ok(GtfData::Mask(mask))
    } else {
        let values: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(s) = values.iter().position(|v| !v.is_finite()) {
            return Err(fail(dims_end + 4 * s, "non-finite value".into()));
        }
        Ok(GtfData::Field(ScalarField::new(shape, values)?))
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_gtf(path: &Path) -> Result<GtfData> {
    decode(&read_bytes(path)?, path)
}

pub fn read_mask_gtf(path: &Path) -> Result<BinaryMask> {
    match read_gtf(path)? {
        GtfData::Mask(m) => Ok(m),
        GtfData::Field(_) => Err(Error::format(path, 4, "dtype f32 where a u8 mask was expected")),
    }
}

pub fn read_field_gtf(path: &Path) -> Result<ScalarField> {
    match read_gtf(path)? {
        GtfData::Field(f) => Ok(f),
        GtfData::Mask(_) => Err(Error::format(path, 4, "dtype u8 where f32 was expected")),
    }
}

pub fn write_mask_gtf(mask: &BinaryMask, path: &Path) -> Result<()> {
    fs::write(path, encode_mask(mask)).map_err(|e| Error::io(path, e))
}

pub fn write_field_gtf(field: &ScalarField, path: &Path) -> Result<()> {
    fs::write(path, encode_field(field)).map_err(|e| Error::io(path, e))
}
